//! Machine-readable run reports.

use serde::Serialize;

use blocksim_core::kernel::OpCounter;
use blocksim_core::state::{Backend, State};
use blocksim_core::system::QuditSystem;

/// What the result payload carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Amplitudes,
    Probabilities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

/// One nonzero basis state of the final statevector. `digits` renders the
/// state most significant qudit first.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(untagged)]
pub enum ResultRecord {
    Amplitude {
        index: u64,
        digits: String,
        re: f64,
        im: f64,
    },
    Probability {
        index: u64,
        digits: String,
        p: f64,
    },
}

/// Everything a simulation run reports: identity, counters, payload.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub dims: Vec<usize>,
    pub backend: String,
    pub wall_time_ns: u64,
    pub amp_reads: u64,
    pub amp_writes: u64,
    pub results: Vec<ResultRecord>,
}

impl RunReport {
    pub fn from_state(
        name: impl Into<String>,
        state: &State,
        backend: Backend,
        counter: &OpCounter,
        wall_time_ns: u64,
        mode: OutputMode,
    ) -> Self {
        let sys: &QuditSystem = state.system();
        let digits_of = |i: u64| sys.digit_string(i).expect("index from the state itself");
        let results = match mode {
            OutputMode::Amplitudes => state
                .sorted_amplitudes()
                .into_iter()
                .map(|(index, a)| ResultRecord::Amplitude {
                    index,
                    digits: digits_of(index),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
            OutputMode::Probabilities => state
                .probabilities()
                .into_iter()
                .map(|(index, p)| ResultRecord::Probability {
                    index,
                    digits: digits_of(index),
                    p,
                })
                .collect(),
        };
        Self {
            name: name.into(),
            dims: sys.dims().to_vec(),
            backend: backend.to_string(),
            wall_time_ns,
            amp_reads: counter.amp_reads,
            amp_writes: counter.amp_writes,
            results,
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Text => self.to_text(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// Payload-only CSV: one record per line under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header = match self.results.first() {
            Some(ResultRecord::Probability { .. }) => "index,digits,p",
            _ => "index,digits,re,im",
        };
        out.push_str(header);
        out.push('\n');
        for record in &self.results {
            match record {
                ResultRecord::Amplitude {
                    index,
                    digits,
                    re,
                    im,
                } => out.push_str(&format!("{index},{digits},{re},{im}\n")),
                ResultRecord::Probability { index, digits, p } => {
                    out.push_str(&format!("{index},{digits},{p}\n"))
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let mut out = format!(
            "circuit: {}\ndims: [{}]\nbackend: {}\nwall_time_ns: {}\namp_reads: {}\namp_writes: {}\n",
            self.name,
            dims.join(", "),
            self.backend,
            self.wall_time_ns,
            self.amp_reads,
            self.amp_writes,
        );
        match self.results.first() {
            Some(ResultRecord::Probability { .. }) => {
                out.push_str(&format!("{:<12} {:<12} p\n", "index", "digits"));
            }
            _ => {
                out.push_str(&format!(
                    "{:<12} {:<12} {:<22} im\n",
                    "index", "digits", "re"
                ));
            }
        }
        for record in &self.results {
            match record {
                ResultRecord::Amplitude {
                    index,
                    digits,
                    re,
                    im,
                } => out.push_str(&format!("{index:<12} {digits:<12} {re:<22} {im}\n")),
                ResultRecord::Probability { index, digits, p } => {
                    out.push_str(&format!("{index:<12} {digits:<12} {p}\n"))
                }
            }
        }
        out
    }
}

/// One cross-check of the kernels against the reference oracle.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub dims: Vec<usize>,
    pub dense_diff: f64,
    pub sparse_diff: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let dims: Vec<String> = row.dims.iter().map(|d| d.to_string()).collect();
            out.push_str(&format!(
                "{} [{}]: dense diff {:.3e}, sparse diff {:.3e} ... {}\n",
                row.name,
                dims.join(","),
                row.dense_diff,
                row.sparse_diff,
                if row.pass { "pass" } else { "FAIL" }
            ));
        }
        let passed = self.rows.iter().filter(|r| r.pass).count();
        out.push_str(&format!(
            "{passed}/{} circuits within {:.0e}\n",
            self.rows.len(),
            self.tolerance
        ));
        out
    }
}

/// One line of the GHZ scaling benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub n: usize,
    pub total_dim: Option<u64>,
    pub median_wall_time_ns: Option<u64>,
    pub amp_writes: Option<u64>,
    pub nonzero_count: Option<usize>,
    pub status: String,
}

pub fn bench_rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("d,n,D,median_wall_time_ns,amp_writes,nonzero_count,status\n");
    let cell = |v: &Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.d,
            row.n,
            cell(&row.total_dim),
            cell(&row.median_wall_time_ns),
            cell(&row.amp_writes),
            row.nonzero_count.map(|x| x.to_string()).unwrap_or_default(),
            row.status
        ));
    }
    out
}

use super::{ModelError, SolverOptions};

/// Flat row-wise linear (mixed-integer) problem handed to a backend.
#[derive(Clone, Debug, Default)]
pub struct LinearProblem {
    pub maximize: bool,
    pub offset: f64,
    pub cost: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub integer: Vec<bool>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub row_start: Vec<usize>,
    pub row_index: Vec<usize>,
    pub row_value: Vec<f64>,
}

impl LinearProblem {
    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lo.len()
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>, lo: f64, hi: f64) {
        self.row_start.push(self.row_index.len());
        for (j, a) in entries {
            self.row_index.push(j);
            self.row_value.push(a);
        }
        self.row_lo.push(lo);
        self.row_hi.push(hi);
    }

    /// Entries of row `i` as `(column, coefficient)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let end = self
            .row_start
            .get(i + 1)
            .copied()
            .unwrap_or(self.row_index.len());
        let start = self.row_start[i];
        self.row_index[start..end]
            .iter()
            .copied()
            .zip(self.row_value[start..end].iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
    Error,
}

#[derive(Clone, Debug)]
pub struct RawSolution {
    pub status: RawStatus,
    pub objective: f64,
    pub col_value: Vec<f64>,
    /// Row duals with the convention `d objective / d rhs`.
    pub row_dual: Option<Vec<f64>>,
    pub mip_gap: f64,
}

impl RawSolution {
    pub fn without_solution(status: RawStatus) -> Self {
        RawSolution {
            status,
            objective: f64::NAN,
            col_value: Vec::new(),
            row_dual: None,
            mip_gap: f64::NAN,
        }
    }
}

pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, lp: &LinearProblem, options: &SolverOptions) -> Result<RawSolution, ModelError>;
}

/// Which backend [`Model::solve`](super::Model::solve) instantiates.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum BackendChoice {
    #[default]
    Highs,
    /// Writes an MPS file, runs an external program and reads its solution
    /// file. `{model}` and `{solution}` in `args` are substituted.
    ExternalMps { program: String, args: Vec<String> },
}

impl BackendChoice {
    /// `DDU_VPP_SOLVER=mps` selects the external adapter with the program in
    /// `DDU_VPP_SOLVER_BIN` and whitespace-separated `DDU_VPP_SOLVER_ARGS`.
    pub fn from_env() -> Self {
        match std::env::var("DDU_VPP_SOLVER").as_deref() {
            Ok("mps") => {
                let program = std::env::var("DDU_VPP_SOLVER_BIN").unwrap_or_else(|_| "highs".into());
                let args = std::env::var("DDU_VPP_SOLVER_ARGS")
                    .map(|s| s.split_whitespace().map(String::from).collect())
                    .unwrap_or_else(|_| {
                        vec![
                            "--model_file".into(),
                            "{model}".into(),
                            "--solution_file".into(),
                            "{solution}".into(),
                        ]
                    });
                BackendChoice::ExternalMps { program, args }
            }
            _ => BackendChoice::Highs,
        }
    }

    pub fn instantiate(&self) -> Result<Box<dyn SolverBackend>, ModelError> {
        Ok(match self {
            BackendChoice::Highs => Box::new(super::HighsBackend),
            BackendChoice::ExternalMps { program, args } => Box::new(super::mps::ExternalMpsBackend {
                program: program.clone(),
                args: args.clone(),
            }),
        })
    }
}

use serde::{Deserialize, Serialize};

use crate::graph::CliqueStats;

/// Per-update structural and timing record. Clique sizes count frontal plus
/// separator variables; the `_dims` fields count scalars.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmootherStats {
    pub frame: u32,
    pub wall_ms: f64,
    pub reelim_vars: usize,
    pub max_clique: usize,
    pub avg_clique: f64,
    pub max_clique_dims: usize,
    pub avg_clique_dims: f64,
    pub num_cliques: usize,
    pub relinearized: usize,
    pub total_vars: usize,
}

impl SmootherStats {
    pub const CSV_HEADER: &'static str = "frame,wall_ms,reelim_vars,max_clique,avg_clique,relinearized,total_vars";

    pub(crate) fn with_cliques(mut self, c: &CliqueStats) -> Self {
        self.max_clique = c.max_clique_vars;
        self.avg_clique = c.avg_clique_vars;
        self.max_clique_dims = c.max_clique_dims;
        self.avg_clique_dims = c.avg_clique_dims;
        self.num_cliques = c.num_cliques;
        self
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.6},{},{},{:.6},{},{}",
            self.frame, self.wall_ms, self.reelim_vars, self.max_clique, self.avg_clique, self.relinearized, self.total_vars
        )
    }
}

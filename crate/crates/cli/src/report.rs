//! Plain-text run reports: one `key: value` line per entry.

use std::fmt::Display;
use std::time::Duration;

use orka::{ObjectEstimate, ShiftVector};

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

pub fn join<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn secs(d: Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.add("command", command);
        r
    }

    pub fn add(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn lambda(&mut self, prefix: &str, lambda: &ShiftVector) {
        for axis in 0..lambda.dims() {
            self.add(
                format!("{prefix}lambda_axis{axis}"),
                join(lambda.axis(axis)),
            );
        }
    }

    pub fn object<T>(&mut self, prefix: &str, est: &ObjectEstimate<T>) {
        self.add(
            format!("{prefix}objective"),
            format!("{:.17e}", est.objective),
        );
        self.add(format!("{prefix}tau"), format!("{:.17e}", est.tau));
        self.add(format!("{prefix}k_band"), est.k_band);
        self.lambda(prefix, &est.lambda);
        let t = &est.timings;
        self.add(format!("{prefix}time_correlate_s"), secs(t.correlate));
        self.add(format!("{prefix}time_kernel_s"), secs(t.kernel));
        self.add(format!("{prefix}time_graph_s"), secs(t.graph));
        self.add(format!("{prefix}time_solve_s"), secs(t.solve));
        self.add(
            format!("{prefix}partition_nodes"),
            join(&est.partition_sizes),
        );
        self.add(
            format!("{prefix}total_nodes"),
            est.partition_sizes.iter().sum::<usize>(),
        );
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            s.push_str(k);
            s.push_str(": ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub loss: f64,
    pub hr: Option<f64>,
    pub ndcg: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    /// Metrics of the model before the first update, when evaluated.
    pub initial: Option<(f64, f64)>,
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (0 means the initial model).
    pub best_epoch: Option<usize>,
}

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

impl TrainHistory {
    pub fn completed_epochs(&self) -> usize {
        self.records.len()
    }

    pub fn best_hr(&self) -> Option<f64> {
        match self.best_epoch? {
            0 => self.initial.map(|m| m.0),
            e => self.records.get(e - 1)?.hr,
        }
    }

    /// `epoch \t loss \t hr \t ndcg` lines. Wall-clock time is kept out so
    /// identical runs produce identical logs; see [`TrainHistory::to_timing`].
    pub fn to_log(&self) -> String {
        let mut s = String::from("epoch\tloss\thr\tndcg\n");
        if let Some((hr, ndcg)) = self.initial {
            let _ = writeln!(s, "0\t-\t{hr:.6}\t{ndcg:.6}");
        }
        for r in &self.records {
            let _ = writeln!(
                s,
                "{}\t{:.6}\t{}\t{}",
                r.epoch,
                r.loss,
                metric(r.hr),
                metric(r.ndcg)
            );
        }
        if let Some(b) = self.best_epoch {
            let _ = writeln!(s, "# best_epoch\t{b}");
        }
        s
    }

    pub fn to_timing(&self) -> String {
        let mut s = String::from("epoch\tseconds\n");
        for r in &self.records {
            let _ = writeln!(s, "{}\t{:.3}", r.epoch, r.seconds);
        }
        s
    }
}

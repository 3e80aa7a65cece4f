//! Named-inequality reports shared by the Rouché check and the certificates.

use serde::Serialize;

/// Outcome of a report. `Inconclusive` means the numerics could not decide,
/// not that a claimed bound is false.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub margin: f64,
    /// Non-strict comparisons accept a zero margin.
    pub strict: bool,
    /// A printed intermediate value; the zero-free conclusion does not rest on it.
    pub checkpoint: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub lemma_id: String,
    pub inputs: Vec<(String, f64)>,
    pub quantities: Vec<(String, f64)>,
    pub inequalities: Vec<Inequality>,
    pub status: Status,
    pub pass: bool,
}

impl CertificateReport {
    pub fn new(lemma_id: impl Into<String>) -> Self {
        Self {
            lemma_id: lemma_id.into(),
            inputs: Vec::new(),
            quantities: Vec::new(),
            inequalities: Vec::new(),
            status: Status::Pass,
            pass: true,
        }
    }

    pub fn input(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.inputs.push((name.into(), value));
        self
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.quantities.push((name.into(), value));
        self
    }

    /// Record `lhs > rhs`.
    pub fn greater(&mut self, label: impl Into<String>, lhs: f64, rhs: f64) -> bool {
        self.push(label.into(), lhs, rhs, true)
    }

    /// Record `lhs ≥ rhs`.
    pub fn at_least(&mut self, label: impl Into<String>, lhs: f64, rhs: f64) -> bool {
        self.push(label.into(), lhs, rhs, false)
    }

    fn push(&mut self, label: String, lhs: f64, rhs: f64, strict: bool) -> bool {
        let margin = lhs - rhs;
        let pass = if strict { margin > 0.0 } else { margin >= 0.0 } && !margin.is_nan();
        self.inequalities.push(Inequality { label, lhs, rhs, margin, strict, checkpoint: false, pass });
        if !pass && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        self.pass = self.status == Status::Pass;
        pass
    }

    /// Flag the most recently recorded inequality as a checkpoint. It still
    /// counts toward `pass`.
    pub fn as_checkpoint(&mut self) -> &mut Self {
        if let Some(last) = self.inequalities.last_mut() {
            last.checkpoint = true;
        }
        self
    }

    /// Every non-checkpoint inequality holds and nothing was left undecided.
    pub fn conclusions_pass(&self) -> bool {
        self.status != Status::Inconclusive && self.inequalities.iter().all(|i| i.checkpoint || i.pass)
    }

    /// Record a comparison the numerics could not decide.
    pub fn undecided(&mut self, label: impl Into<String>, lhs: f64, rhs: f64) {
        let margin = lhs - rhs;
        self.inequalities.push(Inequality {
            label: label.into(),
            lhs,
            rhs,
            margin,
            strict: true,
            checkpoint: false,
            pass: false,
        });
        self.mark_inconclusive();
    }

    /// Downgrade to inconclusive unless already failed.
    pub fn mark_inconclusive(&mut self) {
        if self.status == Status::Pass {
            self.status = Status::Inconclusive;
        }
        self.pass = false;
    }

    pub fn quantity_value(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn inequality(&self, label: &str) -> Option<&Inequality> {
        self.inequalities.iter().find(|i| i.label == label)
    }

    pub fn min_margin(&self) -> f64 {
        self.inequalities.iter().map(|i| i.margin).fold(f64::INFINITY, f64::min)
    }
}

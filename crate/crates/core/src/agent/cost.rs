use serde::{Deserialize, Serialize};

use crate::model::{ActCategory, ActSequence, DialogueActType};

/// Point cost of tutor effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostSchedule {
    /// Informing one attribute.
    pub c_inf: f64,
    /// A confirmation or a rejection.
    pub c_ack_rej: f64,
    /// Rejecting and supplying the right word in one go.
    pub c_crt: f64,
}

impl Default for CostSchedule {
    fn default() -> Self {
        Self {
            c_inf: 5.0,
            c_ack_rej: 0.5,
            c_crt: 5.0,
        }
    }
}

/// Costed kinds of tutor effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TutorEffort {
    Inform,
    Ack,
    Correction,
    Rejection,
}

impl CostSchedule {
    pub fn cost(&self, e: TutorEffort) -> f64 {
        match e {
            TutorEffort::Inform => self.c_inf,
            TutorEffort::Ack | TutorEffort::Rejection => self.c_ack_rej,
            TutorEffort::Correction => self.c_crt,
        }
    }
}

/// Costed efforts in one tutor turn. An inform in a turn that also rejects
/// is a correction (the rejection is part of it); other informs cost per
/// attribute; acknowledgments and standalone rejections are confirmations.
/// Questions, focus shifts, checks and offers of help are free.
pub fn classify_tutor_acts(acts: &ActSequence) -> Vec<TutorEffort> {
    let rejects = acts.contains_type(DialogueActType::Rejection);
    let mut out = Vec::new();
    let mut corrected = false;
    for a in acts.iter() {
        match a.act_type {
            DialogueActType::Inform => {
                let n = if a.category == Some(ActCategory::Both) { 2 } else { 1 };
                for _ in 0..n {
                    if rejects && !corrected {
                        out.push(TutorEffort::Correction);
                        corrected = true;
                    } else {
                        out.push(TutorEffort::Inform);
                    }
                }
            }
            DialogueActType::Acknowledgment => out.push(TutorEffort::Ack),
            _ => {}
        }
    }
    if rejects && !corrected {
        out.push(TutorEffort::Rejection);
    }
    out
}

/// Running tutor cost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub total: f64,
    pub entries: Vec<(TutorEffort, f64)>,
}

impl CostLedger {
    pub fn charge(&mut self, effort: TutorEffort, schedule: &CostSchedule) -> f64 {
        let c = schedule.cost(effort);
        self.total += c;
        self.entries.push((effort, c));
        c
    }

    pub fn charge_turn(&mut self, acts: &ActSequence, schedule: &CostSchedule) -> f64 {
        classify_tutor_acts(acts)
            .into_iter()
            .map(|e| self.charge(e, schedule))
            .sum()
    }

    pub fn count(&self, effort: TutorEffort) -> usize {
        self.entries.iter().filter(|(e, _)| *e == effort).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> ActSequence {
        s.parse().unwrap()
    }

    #[test]
    fn scripted_sequence_costs_eleven() {
        let s = CostSchedule::default();
        let mut l = CostLedger::default();
        for e in [
            TutorEffort::Inform,
            TutorEffort::Ack,
            TutorEffort::Correction,
            TutorEffort::Rejection,
        ] {
            l.charge(e, &s);
        }
        assert_eq!(l.total, 11.0);
    }

    #[test]
    fn turn_classification() {
        assert_eq!(classify_tutor_acts(&seq("inform(color=sako)")), [TutorEffort::Inform]);
        assert_eq!(
            classify_tutor_acts(&seq("reject()+inform(color=sako)")),
            [TutorEffort::Correction]
        );
        assert_eq!(classify_tutor_acts(&seq("reject(color)")), [TutorEffort::Rejection]);
        assert_eq!(classify_tutor_acts(&seq("ack()+focus(shape)")), [TutorEffort::Ack]);
        assert_eq!(
            classify_tutor_acts(&seq("inform(color=sako)+inform(shape=burchak)")),
            [TutorEffort::Inform, TutorEffort::Inform]
        );
        assert!(classify_tutor_acts(&seq("check()+offer_help()")).is_empty());
    }

    #[test]
    fn ledger_is_monotone_and_matches_counts() {
        let s = CostSchedule::default();
        let mut l = CostLedger::default();
        let mut last = 0.0;
        for t in [
            "inform(color=sako)",
            "ack()",
            "reject(color)+inform(color=sako)",
            "reject()",
            "ask(shape)",
        ] {
            l.charge_turn(&seq(t), &s);
            assert!(l.total >= last);
            last = l.total;
        }
        let dot = l.count(TutorEffort::Inform) as f64 * 5.0
            + (l.count(TutorEffort::Ack) + l.count(TutorEffort::Rejection)) as f64 * 0.5
            + l.count(TutorEffort::Correction) as f64 * 5.0;
        assert_eq!(l.total, dot);
    }
}

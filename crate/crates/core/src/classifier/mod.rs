//! Analytic classification of 2TR-periodic states in the Heaviside,
//! vanishing-`τ` limit.
//!
//! Each named state has a binary matrix form and a list of inequalities on
//! condition quantities (see [`conditions`]). Classification evaluates every
//! row of the tables for the relevant delay regime.

pub mod conditions;
pub mod constants;
pub mod enumerate;
pub mod matrix;
pub mod tables;

use serde::{Deserialize, Serialize};

pub use conditions::{condition_report, Cond, ConditionReport};
pub use constants::{synaptic_constants, SynapticConstants};
pub use enumerate::{conjugacy_classes, enumerate_valid_matrices, EnumKind};
pub use matrix::{MatrixKind, Percept, StateMatrix};
pub use tables::{DelayRegime, Family, Row, StateName};

use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::stimulus::Stimulus;

/// A classified state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateLabel {
    pub name: StateName,
    pub regime: DelayRegime,
    pub percept: Percept,
    /// True when the state is not mapped to itself by the A/B swap.
    pub has_conjugate: bool,
}

impl StateLabel {
    fn from_row(row: &Row) -> Self {
        let m = row_matrix(row);
        StateLabel {
            name: row.name,
            regime: row.regime(),
            percept: m.percept(),
            has_conjugate: !m.is_symmetric(),
        }
    }

    /// Looks up a label by name and regime.
    pub fn lookup(name: StateName, regime: DelayRegime) -> Result<Self> {
        tables::find_row(name, regime)
            .map(StateLabel::from_row)
            .ok_or_else(|| Error::Domain(format!("no state {name} in the {regime:?} tables")))
    }
}

fn row_matrix(row: &Row) -> StateMatrix {
    StateMatrix::parse(row.kind, row.matrix).expect("table matrices are well-formed")
}

/// Published matrix form of a label.
pub fn matrix_form(label: &StateLabel) -> Result<StateMatrix> {
    tables::find_row(label.name, label.regime)
        .map(row_matrix)
        .ok_or_else(|| Error::Domain(format!("no state {} in the {:?} tables", label.name, label.regime)))
}

/// Which table set to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeChoice {
    Auto,
    Short,
    Long,
}

/// Result of a classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: DelayRegime,
    pub labels: Vec<StateLabel>,
    pub matrices: Vec<StateMatrix>,
    pub report: ConditionReport,
}

fn rows_holding<'a>(
    tables: impl IntoIterator<Item = &'a [Row]>,
    r: &ConditionReport,
    p: &ModelParams,
    stim: &Stimulus,
    d: f64,
) -> Vec<&'a Row> {
    tables.into_iter().flatten().filter(|row| row.holds(r, p, stim, d)).collect()
}

fn finish(regime: DelayRegime, rows: &[&Row], report: ConditionReport) -> Classification {
    Classification {
        regime,
        labels: rows.iter().map(|r| StateLabel::from_row(r)).collect(),
        matrices: rows.iter().map(|r| row_matrix(r)).collect(),
        report,
    }
}

/// Short-delay classification (`D <= TD`). Exactly one state exists.
///
/// The gap `TD + D < TR` is not required: when the tones leave no time for
/// decay the affected factors are replaced by one.
pub fn classify_short_delay(p: &ModelParams, stim: &Stimulus, d: f64) -> Result<Classification> {
    p.validate()?;
    stim.validate()?;
    validate_params(p, stim).require(&["short_delay", "u1", "u2", "u3"])?;
    let report = conditions::evaluate(p, stim, d)?;
    let rows = rows_holding(tables::short_delay_tables(), &report, p, stim, d);
    if rows.len() != 1 {
        let names: Vec<_> = rows.iter().map(|r| r.name.as_str()).collect();
        return Err(Error::Inconsistent(format!(
            "expected exactly one short-delay state, found {names:?}"
        )));
    }
    Ok(finish(DelayRegime::ShortDelay, &rows, report))
}

/// Long-delay classification (`D > TD`, `TD + D < TR`). Returns every state
/// whose conditions hold; several may coexist and the set may be empty.
pub fn classify_long_delay(p: &ModelParams, stim: &Stimulus, d: f64) -> Result<Classification> {
    p.validate()?;
    stim.validate()?;
    validate_params(p, stim).require(&["long_delay", "sep_ok", "u1", "u2"])?;
    let report = conditions::evaluate(p, stim, d)?;
    let rows = rows_holding(tables::long_delay_tables(), &report, p, stim, d);
    Ok(finish(DelayRegime::LongDelay, &rows, report))
}

/// Dispatches on the regime choice; `Auto` picks by `D <= TD`.
pub fn classify(p: &ModelParams, stim: &Stimulus, d: f64, choice: RegimeChoice) -> Result<Classification> {
    let short = match choice {
        RegimeChoice::Auto => p.delay <= stim.td,
        RegimeChoice::Short => true,
        RegimeChoice::Long => false,
    };
    if short {
        classify_short_delay(p, stim, d)
    } else {
        classify_long_delay(p, stim, d)
    }
}

/// Names of the onset-only, OFF-between-tones states that hold.
pub fn short_main_states(p: &ModelParams, stim: &Stimulus, d: f64) -> Result<Vec<StateName>> {
    let c = classify_long_delay(p, stim, d)?;
    Ok(c
        .labels
        .iter()
        .filter(|l| tables::SHORT_MAIN.iter().any(|r| r.name == l.name))
        .map(|l| l.name)
        .collect())
}

/// Pairs of coexisting onset-only states.
pub fn multistability_pairs(p: &ModelParams, stim: &Stimulus, d: f64) -> Result<Vec<(StateName, StateName)>> {
    let names = short_main_states(p, stim, d)?;
    let mut pairs = Vec::new();
    for (i, &x) in names.iter().enumerate() {
        for &y in &names[i + 1..] {
            pairs.push((x, y));
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gain;
    use crate::stimulus::df_to_d;
    use proptest::prelude::*;
    use tables::Req;

    fn step_ref(pr: f64, df: f64) -> (ModelParams, Stimulus, f64) {
        let p = ModelParams { a: 1.0, b: 2.0, theta: 0.5, tau: 0.001, tau_i: 0.2, delay: 0.01, gain: Gain::Heaviside };
        let s = Stimulus::new(0.03, 1.0 / pr, 5.0, df, 6).unwrap();
        let d = s.d().unwrap();
        (p, s, d)
    }

    fn names(c: &Classification) -> Vec<&'static str> {
        c.labels.iter().map(|l| l.name.as_str()).collect()
    }

    #[test]
    fn short_delay_examples() {
        let (p, s, d) = step_ref(20.0, 0.5);
        let c = classify_short_delay(&p, &s, d).unwrap();
        assert_eq!(names(&c), ["AP"]);
        assert_eq!(c.labels[0].percept, Percept::Segregation);

        let (p, s, d) = step_ref(5.0, 0.0);
        let c = classify_short_delay(&p, &s, d).unwrap();
        assert!((c.report.value(Cond::C7m) - (5.0 - 2.0 * (-0.8f64).exp())).abs() < 1e-12);
        assert_eq!(names(&c), ["I"]);
        assert_eq!(c.labels[0].percept, Percept::Integration);
    }

    #[test]
    fn asci_found_by_condition_search() {
        let mut hit = None;
        'outer: for i in 0..200 {
            let pr = 1.0 + 0.2 * f64::from(i);
            let (p, s, _) = step_ref(pr, 1.0);
            let Ok(c) = classify_short_delay(&p, &s, 0.0) else { continue };
            let r = &c.report;
            if r.lt(Cond::R7m) && r.lt(Cond::R6m) && r.ge(Cond::C5p) {
                hit = Some((pr, c));
                break 'outer;
            }
        }
        let (_, c) = hit.expect("some rate satisfies the AScI inequalities");
        assert_eq!(names(&c), ["AScI"]);
        assert_eq!(c.labels[0].percept, Percept::Integration);
    }

    #[test]
    fn wrong_regime_is_rejected() {
        let (p, s, d) = step_ref(10.0, 0.5);
        let long = ModelParams { delay: 0.05, ..p };
        assert!(matches!(classify_short_delay(&long, &s, d), Err(Error::Regime { flag: "short_delay" })));
        assert!(matches!(classify_long_delay(&p, &s, d), Err(Error::Regime { flag: "long_delay" })));
    }

    #[test]
    fn matrix_forms() {
        let sm = |n| matrix_form(&StateLabel::lookup(n, DelayRegime::LongDelay).unwrap()).unwrap().to_string();
        assert_eq!(sm(StateName::AP), "1100|0011");
        assert_eq!(sm(StateName::IB), "1111|1111");
        assert_eq!(sm(StateName::APcAS), "111001|000111");
        assert!(StateLabel::lookup(StateName::AScI, DelayRegime::LongDelay).is_err());
    }

    #[test]
    fn table_matrices_are_admissible() {
        let fams = [
            (tables::SHORT_MAIN, EnumKind::Sm),
            (tables::SHORT_CONNECT, EnumKind::Sc),
            (tables::LONG_MAIN, EnumKind::Lm),
        ];
        for (rows, kind) in fams {
            let all = enumerate_valid_matrices(kind);
            let classes = conjugacy_classes(&all);
            assert_eq!(classes.len(), rows.len());
            for row in rows {
                let m = row_matrix(row);
                assert!(all.contains(&m), "{} {m}", row.name);
            }
            // one table column per class
            for class in &classes {
                assert_eq!(rows.iter().filter(|r| class.contains(&row_matrix(r))).count(), 1, "{class:?}");
            }
        }
        for rows in tables::long_delay_tables().into_iter().chain(tables::short_delay_tables()) {
            for row in rows {
                assert!(row_matrix(row).is_well_formed(), "{}", row.name);
            }
        }
    }

    #[test]
    fn degenerate_states_never_hold() {
        let degenerate: Vec<_> = tables::LONG_CONNECT.iter().filter(|r| r.is_degenerate()).collect();
        assert_eq!(degenerate.len(), 3);
        let (p, s, d) = step_ref(10.0, 0.5);
        let p = ModelParams { delay: 0.04, ..p };
        let r = conditions::evaluate(&p, &s, d).unwrap();
        assert!(degenerate.iter().all(|row| !row.holds(&r, &p, &s, d)));
        assert!(!Req::Never.holds(&r, &p, &s, d));
    }

    #[test]
    fn onset_guard_matches_p() {
        let (p, s, _) = step_ref(10.0, 0.5);
        for d in [0.0, 0.5, 1.0, 1.4, 1.6, 3.0] {
            let r = conditions::evaluate(&p, &s, d).unwrap();
            assert_eq!(Req::OnsetGuard.holds(&r, &p, &s, d), r.lt(Cond::P), "d = {d}");
        }
    }

    fn short_regime() -> impl Strategy<Value = (ModelParams, Stimulus, f64)> {
        (0.05f64..0.95, 0.02f64..1.0, 1e-3f64..0.1, 0.0f64..=1.0, 0.0f64..1.0, 0.0f64..3.0, 0.0f64..6.0, 0.0f64..1.0, 0.0f64..1.0)
            .prop_filter_map("regime", |(th, tau_i, td, dfrac, gap, a, b, cf, df)| {
                let delay = td * dfrac;
                let tr = (td + delay) * (1.0001 + 5.0 * gap);
                let c = b + th + cf * 8.0;
                let p = ModelParams { a, b, theta: th, tau: tau_i / 200.0, tau_i, delay, gain: Gain::Heaviside };
                let s = Stimulus::new(td, tr, c, df, 6).ok()?;
                (a - b < th).then_some((p, s, df_to_d(c, df, 6).ok()?))
            })
    }

    proptest! {
        #[test]
        fn short_delay_partition((p, s, d) in short_regime()) {
            let r = conditions::evaluate(&p, &s, d).unwrap();
            let n = tables::short_delay_tables().into_iter().flatten().filter(|row| row.holds(&r, &p, &s, d)).count();
            prop_assert_eq!(n, 1);
        }

        #[test]
        fn conjugate_labels_share_conditions((p, s, d) in short_regime()) {
            // a state and its conjugate are one table column, so they are
            // satisfied by the same report
            let c = classify_short_delay(&p, &s, d).unwrap();
            let m = &c.matrices[0];
            prop_assert_eq!(c.labels[0].has_conjugate, !m.is_symmetric());
            prop_assert_eq!(m.conjugate().percept(), m.percept());
        }
    }
}

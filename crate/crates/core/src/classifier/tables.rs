//! Existence tables: for each named state, its matrix form and the
//! inequalities on condition quantities under which it exists.

use serde::{Deserialize, Serialize};

use super::conditions::{Cond, ConditionReport};
use super::matrix::MatrixKind;
use crate::model::ModelParams;
use crate::stimulus::Stimulus;

macro_rules! names {
    ($($v:ident => $s:literal),* $(,)?) => {
        /// State names. Several names occur in both delay regimes; the regime is
        /// carried separately by [`StateLabel`](super::StateLabel).
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum StateName { $(#[serde(rename = $s)] $v),* }

        impl StateName {
            pub const ALL: &'static [StateName] = &[$(StateName::$v),*];

            pub fn as_str(self) -> &'static str {
                match self { $(StateName::$v => $s),* }
            }

            pub fn parse(s: &str) -> Option<StateName> {
                match s { $($s => Some(StateName::$v),)* _ => None }
            }
        }
    };
}

names! {
    S => "S", SB => "SB", SD => "SD", AP => "AP", AS => "AS", ASD => "ASD", I => "I", ID => "ID", IB => "IB",
    ZcS => "ZcS", ZcAP => "ZcAP", ZcAS => "ZcAS", ZcI => "ZcI", ScAS => "ScAS", SDcAS => "SDcAS",
    ScSD => "ScSD", APcAS => "APcAS", APcI => "APcI",
    IL1 => "IL1", IL2 => "IL2", ASDL1 => "ASDL1", ASL => "ASL", SL => "SL", IDL1 => "IDL1",
    IDL2 => "IDL2", ASDL2 => "ASDL2", SDL => "SDL",
    AScIL => "AScIL", ScASL => "ScASL", ScIL => "ScIL", AScIDL => "AScIDL", ScASDL => "ScASDL",
    ScIDL => "ScIDL", ScASDL2 => "ScASDL2", ScASDL3 => "ScASDL3", APcIDL => "APcIDL", ScSDL => "ScSDL",
    APcIL => "APcIL", ScASDL4 => "ScASDL4", ScASL2 => "ScASL2", ZcIL => "ZcIL",
    ScASL2Late => "ScASL2*", ZcIL2 => "ZcIL2", ZcSL => "ZcSL",
    IS => "IS", IDS => "IDS", AScI => "AScI",
}

impl std::fmt::Display for StateName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which delay regime a table applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayRegime {
    /// `D > TD`.
    LongDelay,
    /// `D <= TD`.
    ShortDelay,
}

/// Table a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Turn-ons at onsets only, units OFF between tones.
    ShortMain,
    /// Some turn-on strictly inside a tone, units OFF between tones.
    ShortConnect,
    /// Turn-ons at onsets only, some activity outlasting a tone.
    LongMain,
    /// Long in one interval, connecting in the other.
    LongMainShortConnect,
    /// Long and connecting.
    LongConnect,
    /// Short-delay states with `P >= θ`.
    ShortDelayHigh,
    /// Short-delay states with `P < θ`.
    ShortDelayLow,
}

/// A single requirement of a table row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Req {
    Ge(Cond),
    Lt(Cond),
    /// `D <= 2TD`.
    DelayAtMostTwiceTd,
    /// The inner turn-on of A, at `t* = TR - D + τ_i ln((a + d - θ)/b)`,
    /// must be followed by inhibition before the next tone: `t* + D < TR`.
    OnsetGuard,
    /// Branch on `K > θ`.
    KBranch(&'static [Req], &'static [Req]),
    /// Only possible for a vanishing fast timescale.
    Never,
}

impl Req {
    pub fn holds(&self, r: &ConditionReport, p: &ModelParams, stim: &Stimulus, d: f64) -> bool {
        match *self {
            Req::Ge(c) => r.ge(c),
            Req::Lt(c) => r.lt(c),
            Req::DelayAtMostTwiceTd => p.delay <= 2.0 * stim.td,
            Req::OnsetGuard => {
                let ratio = (p.a + d - p.theta) / p.b;
                if !(ratio > 0.0) || !ratio.is_finite() {
                    return false;
                }
                let t_star = stim.tr - p.delay + p.tau_i * ratio.ln();
                t_star + p.delay < stim.tr
            }
            Req::KBranch(hi, lo) => {
                let branch = if r.value(Cond::K) > r.theta { hi } else { lo };
                branch.iter().all(|q| q.holds(r, p, stim, d))
            }
            Req::Never => false,
        }
    }

    /// Quantities compared against `θ` by this requirement.
    pub fn conds(&self, out: &mut Vec<Cond>) {
        match *self {
            Req::Ge(c) | Req::Lt(c) => out.push(c),
            Req::OnsetGuard => out.push(Cond::P),
            Req::KBranch(hi, lo) => {
                out.push(Cond::K);
                for q in hi.iter().chain(lo) {
                    q.conds(out);
                }
            }
            Req::DelayAtMostTwiceTd | Req::Never => {}
        }
    }
}

/// One column of an existence table.
#[derive(Clone, Copy, Debug)]
pub struct Row {
    pub name: StateName,
    pub family: Family,
    pub kind: MatrixKind,
    pub matrix: &'static str,
    pub reqs: &'static [Req],
}

impl Row {
    pub fn regime(&self) -> DelayRegime {
        match self.family {
            Family::ShortDelayHigh | Family::ShortDelayLow => DelayRegime::ShortDelay,
            _ => DelayRegime::LongDelay,
        }
    }

    pub fn holds(&self, r: &ConditionReport, p: &ModelParams, stim: &Stimulus, d: f64) -> bool {
        self.reqs.iter().all(|q| q.holds(r, p, stim, d))
    }

    pub fn conds(&self) -> Vec<Cond> {
        let mut out = Vec::new();
        for q in self.reqs {
            q.conds(&mut out);
        }
        out
    }

    /// Degenerate rows that exist only in the zero-timescale limit.
    pub fn is_degenerate(&self) -> bool {
        self.reqs.contains(&Req::Never)
    }
}

use Cond::*;
use Req::{Ge, Lt};

const fn row(name: StateName, family: Family, kind: MatrixKind, matrix: &'static str, reqs: &'static [Req]) -> Row {
    Row { name, family, kind, matrix, reqs }
}

use Family::*;
use MatrixKind::{Lm, Mixed, Sc, Sm};
use StateName as N;

/// Long delay, units OFF between tones, turn-ons at onsets.
pub static SHORT_MAIN: &[Row] = &[
    row(N::S, ShortMain, Sm, "1100/0000", &[Lt(C1), Lt(C2p), Lt(C3p)]),
    row(N::SB, ShortMain, Sm, "1100/1100", &[Lt(C3p), Ge(C8m), Lt(C9)]),
    row(N::SD, ShortMain, Sm, "1100/0100", &[Ge(C4m), Ge(C2m), Lt(C3p), Lt(C8m), Lt(C9)]),
    row(N::AP, ShortMain, Sm, "1100/0011", &[Lt(C2p), Ge(C3m)]),
    row(N::AS, ShortMain, Sm, "1111/0011", &[Ge(C3m), Lt(C5p), Ge(C8m), Lt(C10)]),
    row(N::ASD, ShortMain, Sm, "1101/0011", &[Ge(C2m), Ge(C3m), Lt(C5p), Lt(C8m), Lt(C10)]),
    row(N::I, ShortMain, Sm, "1111/0000", &[Ge(C1), Lt(C6p)]),
    row(N::ID, ShortMain, Sm, "1101/0111", &[Ge(C3m), Ge(C5m), Lt(C7m), Lt(C10)]),
    row(N::IB, ShortMain, Sm, "1111/1111", &[Ge(C7m), Lt(C10)]),
];

/// Long delay, units OFF between tones, some turn-on inside a tone.
pub static SHORT_CONNECT: &[Row] = &[
    row(N::ZcS, ShortConnect, Sc, "001000/001000", &[Lt(C4m), Ge(C4p), Ge(C2p), Lt(C9)]),
    row(N::ZcAP, ShortConnect, Sc, "001000/000001", &[Lt(C2p), Lt(C3m), Ge(C3p)]),
    row(
        N::ZcAS,
        ShortConnect,
        Sc,
        "001001/000001",
        &[
            Req::KBranch(&[Lt(C3m), Ge(C3p), Ge(C2p), Lt(C5p)], &[Lt(C8m), Ge(C8p), Ge(C3p), Lt(C5p)]),
            Lt(C10),
        ],
    ),
    row(N::ZcI, ShortConnect, Sc, "001001/001001", &[Lt(C3m), Ge(C3p), Ge(C5p), Lt(C10)]),
    row(N::ScAS, ShortConnect, Sc, "001111/000001", &[Ge(C3p), Lt(C5p), Ge(C8m), Lt(C6m), Lt(C10)]),
    row(N::SDcAS, ShortConnect, Sc, "001111/000011", &[Lt(C3m), Ge(C3p), Lt(C5p), Ge(C8m), Ge(C6m), Lt(C10)]),
    row(N::ScSD, ShortConnect, Sc, "111000/001000", &[Ge(C4m), Lt(C2m), Ge(C2p), Lt(C3p), Lt(C9)]),
    row(N::APcAS, ShortConnect, Sc, "111001/000111", &[Ge(C3m), Lt(C5p), Lt(C2m), Ge(C2p), Lt(C10)]),
    row(N::APcI, ShortConnect, Sc, "111001/001111", &[Ge(C3m), Lt(C5m), Ge(C5p), Lt(C10)]),
];

/// Long delay, activity outlasting a tone, turn-ons at onsets.
pub static LONG_MAIN: &[Row] = &[
    row(N::IL1, LongMain, Lm, "111111/111111", &[Ge(D7m), Ge(D10)]),
    row(N::IL2, LongMain, Lm, "111110/111110", &[Ge(D7m), Lt(D10), Ge(C10)]),
    row(N::ASDL1, LongMain, Lm, "111010/111110", &[Lt(D7m), Ge(D5m), Ge(D3m), Lt(D10), Ge(C10)]),
    row(N::ASL, LongMain, Lm, "111000/111110", &[Ge(D3m), Lt(D5p), Ge(D8m), Ge(C10)]),
    row(N::SL, LongMain, Lm, "111000/111000", &[Lt(D3p), Ge(D8m), Ge(D9)]),
    row(N::IDL1, LongMain, Lm, "111011/011111", &[Ge(D3m), Lt(D7m), Ge(D5m), Ge(D10)]),
    row(N::IDL2, LongMain, Lm, "111010/011110", &[Ge(D3m), Lt(D7m), Ge(D5m), Lt(D10), Ge(C10)]),
    row(N::ASDL2, LongMain, Lm, "111000/011110", &[Ge(D3m), Ge(D5m), Lt(D8m), Ge(D2m), Ge(C10)]),
    row(N::SDL, LongMain, Lm, "111000/011000", &[Ge(D4m), Lt(D8m), Ge(D2m), Lt(D3p), Ge(D9)]),
];

/// Long in one interval and connecting in the other.
pub static LONG_MAIN_SHORT_CONNECT: &[Row] = &[
    row(N::AScIL, LongMainShortConnect, Mixed, "11110010/11111110", &[Ge(D3m), Ge(C7m), Lt(D5m), Ge(D2p), Lt(D10), Ge(C10)]),
    row(N::ScASL, LongMainShortConnect, Mixed, "11110000/11110010", &[Ge(C3m), Lt(D5p), Lt(D3m), Ge(D3p), Ge(D8m), Ge(C10)]),
    row(N::ScIL, LongMainShortConnect, Mixed, "11110010/11110010", &[Ge(C3m), Ge(D5p), Lt(D3m), Ge(D3p), Ge(D7m), Lt(D10), Ge(C10)]),
    row(N::AScIDL, LongMainShortConnect, Mixed, "11110010/01111110", &[Ge(D3m), Lt(D5m), Ge(D5p), Ge(C5m), Lt(D7m), Lt(D10), Ge(C10)]),
    row(N::ScASDL, LongMainShortConnect, Mixed, "11110000/01110010", &[Ge(C3m), Lt(D5p), Lt(D3m), Ge(D3p), Lt(D8m), Ge(D2m), Ge(C10)]),
    row(N::ScIDL, LongMainShortConnect, Mixed, "11110010/01110010", &[Ge(C3m), Ge(D5p), Lt(D3m), Ge(D3p), Lt(D7m), Ge(C5m), Lt(D10), Ge(C10)]),
    row(N::ScASDL2, LongMainShortConnect, Mixed, "01110000/11110010", &[Lt(C3m), Ge(C6m), Ge(D3p), Lt(D5p), Ge(D8m), Ge(C10)]),
];

/// Long and connecting, including the documented degenerate forms.
pub static LONG_CONNECT: &[Row] = &[
    row(N::ScASDL3, LongConnect, Mixed, "11110010/00110010", &[Ge(C3m), Lt(D3m), Ge(D3p), Lt(D5m), Ge(D5p), Lt(D10), Ge(C10)]),
    row(N::APcIDL, LongConnect, Mixed, "11110010/00111110", &[Ge(D3m), Lt(C5m), Ge(D5p), Lt(D10), Ge(C10)]),
    row(N::ScSDL, LongConnect, Mixed, "11110000/00110000", &[Lt(D3p), Ge(D4m), Lt(D2m), Ge(D2p), Ge(D9)]),
    row(N::APcIL, LongConnect, Mixed, "11110011/00111111", &[Ge(D3m), Lt(D5m), Ge(D5p), Ge(D10)]),
    row(N::ScASDL4, LongConnect, Mixed, "00110000/11110010", &[Lt(C6m), Ge(D6p), Lt(D5p), Ge(D8m), Ge(C10)]),
    row(
        N::ScASL2,
        LongConnect,
        Mixed,
        "00110000/00110010",
        &[Lt(C3m), Ge(C10), Req::DelayAtMostTwiceTd, Lt(SD1), Ge(SL1), Lt(SK1)],
    ),
    row(N::ZcIL, LongConnect, Mixed, "00110010/00110010", &[Lt(C3m), Ge(C10), Req::DelayAtMostTwiceTd, Ge(SK1), Lt(SK2)]),
    row(N::ScASL2Late, LongConnect, Mixed, "00110000/00110010", &[Req::Never]),
    row(N::ZcIL2, LongConnect, Mixed, "00110011/00110011", &[Req::Never]),
    row(N::ZcSL, LongConnect, Mixed, "00110000/00110000", &[Req::Never]),
];

/// Short delay with `P >= θ`.
pub static SHORT_DELAY_HIGH: &[Row] = &[
    row(N::I, ShortDelayHigh, Sc, "111111/111111", &[Ge(P), Ge(C7m)]),
    row(N::ID, ShortDelayHigh, Sc, "111011/011111", &[Ge(P), Lt(C7m)]),
];

/// Short delay with `P < θ`.
pub static SHORT_DELAY_LOW: &[Row] = &[
    row(N::IS, ShortDelayLow, Sc, "111111/111111", &[Lt(P), Ge(R7m)]),
    row(N::IDS, ShortDelayLow, Sc, "111011/011111", &[Lt(P), Lt(R7m), Ge(R6m)]),
    row(N::AS, ShortDelayLow, Sc, "111000/111111", &[Lt(P), Lt(C5p), Ge(C8m)]),
    row(N::ASD, ShortDelayLow, Sc, "111000/011111", &[Lt(P), Lt(C5p), Lt(C8m), Ge(C2m)]),
    row(N::AP, ShortDelayLow, Sc, "111000/000111", &[Lt(P), Lt(C2p)]),
    row(N::APcAS, ShortDelayLow, Sc, "111000/001111", &[Lt(P), Lt(C2m), Ge(C2p)]),
    row(N::AScI, ShortDelayLow, Sc, "111001/001111", &[Lt(P), Lt(R6m), Ge(C5p), Req::OnsetGuard]),
];

/// Every long-delay table.
pub fn long_delay_tables() -> [&'static [Row]; 5] {
    [SHORT_MAIN, SHORT_CONNECT, LONG_MAIN, LONG_MAIN_SHORT_CONNECT, LONG_CONNECT]
}

/// Every short-delay table.
pub fn short_delay_tables() -> [&'static [Row]; 2] {
    [SHORT_DELAY_HIGH, SHORT_DELAY_LOW]
}

/// Looks up the row for a name within a regime.
pub fn find_row(name: StateName, regime: DelayRegime) -> Option<&'static Row> {
    let tables: Vec<&'static [Row]> = match regime {
        DelayRegime::LongDelay => long_delay_tables().to_vec(),
        DelayRegime::ShortDelay => short_delay_tables().to_vec(),
    };
    tables.into_iter().flatten().find(|r| r.name == name)
}

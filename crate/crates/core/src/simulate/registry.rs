use std::fmt;
use std::str::FromStr;

use crate::design::{Design, HypothesisKind};
use crate::distgen::{ErrorLaw, Family};
use crate::error::{Error, Result};

/// The two layouts of the study: five groups, or a 2 x 5 crossed design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layout {
    OneWay,
    TwoWay,
}

impl Layout {
    pub const ALL: [Layout; 2] = [Layout::OneWay, Layout::TwoWay];

    pub fn tag(self) -> &'static str {
        match self {
            Layout::OneWay => "one-way",
            Layout::TwoWay => "two-way",
        }
    }

    pub fn factors(self) -> Vec<usize> {
        match self {
            Layout::OneWay => vec![5],
            Layout::TwoWay => vec![2, 5],
        }
    }

    pub fn n_cells(self) -> usize {
        self.factors().iter().product()
    }

    /// Overall equality for one-way, the interaction for two-way.
    pub fn hypothesis(self) -> HypothesisKind {
        match self {
            Layout::OneWay => HypothesisKind::Overall,
            Layout::TwoWay => HypothesisKind::Interaction,
        }
    }

    /// Number of scenarios in each setting.
    pub fn table_sizes(self) -> [usize; 3] {
        match self {
            Layout::OneWay => [9, 16, 4],
            Layout::TwoWay => [8, 13, 3],
        }
    }

    pub(crate) fn id(self) -> u64 {
        match self {
            Layout::OneWay => 1,
            Layout::TwoWay => 2,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "one-way" | "oneway" => Ok(Layout::OneWay),
            "two-way" | "twoway" => Ok(Layout::TwoWay),
            other => Err(Error::Config(format!("unknown layout '{other}', expected one-way or two-way"))),
        }
    }
}

/// Plot colour groups of the scenario labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColorClass {
    BalancedHomoscedastic,
    UnbalancedHomoscedastic,
    BalancedHeteroscedastic,
    PositivePairing,
    NegativePairing,
    ModerateOutlier,
    HeavyOutlier,
}

impl ColorClass {
    pub const ALL: [ColorClass; 7] = [
        ColorClass::BalancedHomoscedastic,
        ColorClass::UnbalancedHomoscedastic,
        ColorClass::BalancedHeteroscedastic,
        ColorClass::PositivePairing,
        ColorClass::NegativePairing,
        ColorClass::ModerateOutlier,
        ColorClass::HeavyOutlier,
    ];

    pub fn from_label(label: &str) -> Option<Self> {
        let l = label.trim();
        if l.contains("20% outlier") {
            Some(ColorClass::HeavyOutlier)
        } else if l.contains("10% outlier") || l.contains("15% outlier") {
            Some(ColorClass::ModerateOutlier)
        } else if l.contains("positive pairing") {
            Some(ColorClass::PositivePairing)
        } else if l.contains("negative pairing") {
            Some(ColorClass::NegativePairing)
        } else {
            match l {
                "balanced-homoscedastic" => Some(ColorClass::BalancedHomoscedastic),
                "unbalanced-homoscedastic" => Some(ColorClass::UnbalancedHomoscedastic),
                "balanced-heteroscedastic" => Some(ColorClass::BalancedHeteroscedastic),
                _ => None,
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorClass::BalancedHomoscedastic => "balanced-homoscedastic",
            ColorClass::UnbalancedHomoscedastic => "unbalanced-homoscedastic",
            ColorClass::BalancedHeteroscedastic => "balanced-heteroscedastic",
            ColorClass::PositivePairing => "positive pairing",
            ColorClass::NegativePairing => "negative pairing",
            ColorClass::ModerateOutlier => "10/15% outlier",
            ColorClass::HeavyOutlier => "20% outlier",
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            ColorClass::BalancedHomoscedastic => "#1b9e77",
            ColorClass::UnbalancedHomoscedastic => "#d95f02",
            ColorClass::BalancedHeteroscedastic => "#7570b3",
            ColorClass::PositivePairing => "#e7298a",
            ColorClass::NegativePairing => "#66a61e",
            ColorClass::ModerateOutlier => "#e6ab02",
            ColorClass::HeavyOutlier => "#a6761d",
        }
    }
}

impl fmt::Display for ColorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the scenario tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: Layout,
    /// 1 symmetric, 2 skewed, 3 discrete.
    pub setting: u8,
    /// 1-based row within its table.
    pub index: usize,
    pub law: ErrorLaw,
    pub base_sizes: Vec<usize>,
    pub scales: Vec<f64>,
    pub label: String,
}

impl Scenario {
    pub fn sizes(&self, m: usize) -> Vec<usize> {
        self.base_sizes.iter().map(|n| n + m).collect()
    }

    pub fn design(&self, m: usize) -> Result<Design> {
        Design::new(self.layout.factors(), self.sizes(m))
    }

    /// Whether the cell distributions coincide, which for a common
    /// standardized law is the case exactly when all scales are equal.
    pub fn h0f_holds(&self) -> bool {
        self.scales.windows(2).all(|w| w[0] == w[1])
    }

    pub fn color_class(&self) -> ColorClass {
        ColorClass::from_label(&self.label).expect("registry labels are classified")
    }
}

const NORMAL: Family = Family::Normal { mean: 0.0, sd: 1.0 };
const LOGISTIC: Family = Family::Logistic { location: 0.0, scale: 1.0 };
const EXP1: Family = Family::Exponential { rate: 1.0 };
const EXP10: Family = Family::Exponential { rate: 0.1 };
const CHI3: Family = Family::ChiSquare { df: 3.0 };
const CHI10: Family = Family::ChiSquare { df: 10.0 };
const POI25: Family = Family::Poisson { rate: 25.0 };
const POI5: Family = Family::Poisson { rate: 5.0 };

fn gamma(shape: f64, rate: f64) -> Family {
    Family::Gamma { shape, rate }
}

struct Row {
    law: ErrorLaw,
    sizes: Sizes,
    scales: Scales,
    label: &'static str,
}

#[derive(Clone, Copy)]
enum Sizes {
    Balanced,
    Unbalanced,
    /// Reversed unbalanced block order (two-way negative pairing).
    Reversed,
    Increasing,
}

#[derive(Clone, Copy)]
enum Scales {
    Equal,
    Rising,
    Falling,
}

fn row(law: ErrorLaw, sizes: Sizes, scales: Scales, label: &'static str) -> Row {
    Row { law, sizes, scales, label }
}

fn pure(f: Family) -> ErrorLaw {
    ErrorLaw::pure(f)
}

fn mix(base: Family, outlier: Family, q: f64) -> ErrorLaw {
    ErrorLaw::mixture(base, outlier, q)
}

const BH: &str = "balanced-homoscedastic";
const UH: &str = "unbalanced-homoscedastic";
const BHET: &str = "balanced-heteroscedastic";
const POS: &str = "unbalanced-heteroscedastic (positive pairing)";
const NEG: &str = "unbalanced-heteroscedastic (negative pairing)";

fn one_way_rows(setting: u8) -> Vec<Row> {
    use Scales::*;
    use Sizes::*;
    match setting {
        1 => vec![
            row(pure(NORMAL), Balanced, Equal, BH),
            row(pure(NORMAL), Unbalanced, Equal, UH),
            row(pure(NORMAL), Balanced, Rising, BHET),
            row(pure(NORMAL), Increasing, Rising, POS),
            row(pure(NORMAL), Increasing, Falling, NEG),
            row(mix(NORMAL, Family::Normal { mean: 10.0, sd: 1.0 }, 0.1), Balanced, Equal, "balanced-homoscedastic with 10% outlier"),
            row(mix(NORMAL, Family::Normal { mean: 10.0, sd: 1.0 }, 0.2), Balanced, Equal, "balanced-homoscedastic with 20% outlier"),
            row(pure(LOGISTIC), Increasing, Rising, POS),
            row(pure(LOGISTIC), Increasing, Falling, NEG),
        ],
        2 => vec![
            row(pure(EXP1), Balanced, Equal, BH),
            row(pure(EXP1), Unbalanced, Equal, UH),
            row(mix(EXP1, EXP10, 0.1), Balanced, Equal, "balanced-homoscedastic with 10% outlier"),
            row(mix(EXP1, EXP10, 0.2), Balanced, Equal, "balanced-homoscedastic with 20% outlier"),
            row(pure(CHI3), Balanced, Equal, BH),
            row(pure(CHI3), Unbalanced, Equal, UH),
            row(pure(CHI10), Balanced, Equal, BH),
            row(pure(CHI10), Unbalanced, Equal, UH),
            row(pure(gamma(10.0, 0.1)), Balanced, Equal, BH),
            row(pure(gamma(10.0, 0.1)), Unbalanced, Equal, UH),
            row(mix(gamma(1.0, 0.1), gamma(10.0, 0.1), 0.1), Balanced, Equal, "balanced-homoscedastic with 10% outlier"),
            row(mix(gamma(1.0, 0.1), gamma(10.0, 0.1), 0.2), Balanced, Equal, "balanced-homoscedastic with 20% outlier"),
            row(pure(gamma(1.0, 2.0)), Balanced, Equal, BH),
            row(pure(gamma(1.0, 2.0)), Unbalanced, Equal, UH),
            row(mix(gamma(1.0, 2.0), gamma(10.0, 2.0), 0.1), Balanced, Equal, "balanced-homoscedastic with 10% outlier"),
            row(mix(gamma(1.0, 2.0), gamma(10.0, 2.0), 0.2), Balanced, Equal, "balanced-homoscedastic with 20% outlier"),
        ],
        3 => vec![
            row(pure(POI25), Balanced, Equal, BH),
            row(pure(POI25), Unbalanced, Equal, UH),
            row(mix(POI25, POI5, 0.1), Balanced, Equal, "balanced-homoscedastic with 10% outlier"),
            row(mix(POI25, POI5, 0.2), Balanced, Equal, "balanced-homoscedastic with 20% outlier"),
        ],
        _ => Vec::new(),
    }
}

fn two_way_rows(setting: u8) -> Vec<Row> {
    use Scales::*;
    use Sizes::*;
    const OUT15: &str = "balanced-homoscedastic with 15% outlier";
    match setting {
        1 => vec![
            row(pure(NORMAL), Balanced, Equal, BH),
            row(pure(NORMAL), Unbalanced, Equal, UH),
            row(pure(NORMAL), Balanced, Rising, BHET),
            row(pure(NORMAL), Unbalanced, Rising, POS),
            row(pure(NORMAL), Reversed, Falling, NEG),
            row(mix(NORMAL, Family::Normal { mean: 10.0, sd: 1.0 }, 0.15), Balanced, Equal, OUT15),
            row(pure(LOGISTIC), Unbalanced, Rising, POS),
            row(pure(LOGISTIC), Reversed, Falling, NEG),
        ],
        2 => vec![
            row(pure(EXP1), Balanced, Equal, BH),
            row(pure(EXP1), Unbalanced, Equal, UH),
            row(mix(EXP1, EXP10, 0.15), Balanced, Equal, OUT15),
            row(pure(CHI3), Balanced, Equal, BH),
            row(pure(CHI3), Unbalanced, Equal, UH),
            row(pure(CHI10), Balanced, Equal, BH),
            row(pure(CHI10), Unbalanced, Equal, UH),
            row(pure(gamma(10.0, 0.1)), Balanced, Equal, BH),
            row(pure(gamma(10.0, 0.1)), Unbalanced, Equal, UH),
            row(mix(gamma(1.0, 0.1), gamma(10.0, 0.1), 0.15), Balanced, Equal, OUT15),
            row(pure(gamma(1.0, 2.0)), Balanced, Equal, BH),
            row(pure(gamma(1.0, 2.0)), Unbalanced, Equal, UH),
            row(mix(gamma(1.0, 2.0), gamma(10.0, 2.0), 0.15), Balanced, Equal, OUT15),
        ],
        3 => vec![
            row(pure(POI25), Balanced, Equal, BH),
            row(pure(POI25), Unbalanced, Equal, UH),
            row(mix(POI25, POI5, 0.15), Balanced, Equal, OUT15),
        ],
        _ => Vec::new(),
    }
}

fn expand_sizes(layout: Layout, sizes: Sizes) -> Vec<usize> {
    match layout {
        Layout::OneWay => match sizes {
            Sizes::Balanced => vec![5; 5],
            Sizes::Unbalanced => vec![5, 5, 5, 5, 15],
            Sizes::Increasing | Sizes::Reversed => vec![4, 7, 10, 13, 15],
        },
        Layout::TwoWay => match sizes {
            Sizes::Balanced => vec![5; 10],
            Sizes::Unbalanced | Sizes::Increasing => [vec![4; 5], vec![7; 5]].concat(),
            Sizes::Reversed => [vec![7; 5], vec![4; 5]].concat(),
        },
    }
}

fn expand_scales(layout: Layout, scales: Scales) -> Vec<f64> {
    match layout {
        Layout::OneWay => match scales {
            Scales::Equal => vec![1.0; 5],
            Scales::Rising => vec![1.0, 1.2, 1.5, 1.7, 2.0],
            Scales::Falling => vec![2.0, 1.7, 1.5, 1.2, 1.0],
        },
        Layout::TwoWay => match scales {
            Scales::Equal => vec![1.0; 10],
            Scales::Rising => [vec![1.0; 5], vec![2.0; 5]].concat(),
            Scales::Falling => [vec![2.0; 5], vec![1.0; 5]].concat(),
        },
    }
}

fn rows(layout: Layout, setting: u8) -> Vec<Row> {
    match layout {
        Layout::OneWay => one_way_rows(setting),
        Layout::TwoWay => two_way_rows(setting),
    }
}

/// The scenario in row `index` (1-based) of the given layout and setting.
pub fn build_scenario(layout: Layout, setting: u8, index: usize) -> Result<Scenario> {
    let table = rows(layout, setting);
    if table.is_empty() {
        return Err(Error::Registry(format!("{layout} layout has no setting {setting}")));
    }
    let count = table.len();
    let r = index
        .checked_sub(1)
        .and_then(|i| table.into_iter().nth(i))
        .ok_or_else(|| {
            Error::Registry(format!(
                "{layout} setting {setting} has scenarios 1 to {count}, not {index}"
            ))
        })?;
    Ok(Scenario {
        layout,
        setting,
        index,
        law: r.law,
        base_sizes: expand_sizes(layout, r.sizes),
        scales: expand_scales(layout, r.scales),
        label: r.label.to_string(),
    })
}

/// All scenarios of a layout, ordered by setting and index.
pub fn registry(layout: Layout) -> Vec<Scenario> {
    (1..=3u8)
        .flat_map(|s| (1..=rows(layout, s).len()).map(move |i| (s, i)))
        .map(|(s, i)| build_scenario(layout, s, i).expect("index within table"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        assert_eq!(registry(Layout::OneWay).len(), 29);
        assert_eq!(registry(Layout::TwoWay).len(), 24);
        for layout in Layout::ALL {
            for s in 1..=3u8 {
                assert_eq!(rows(layout, s).len(), layout.table_sizes()[s as usize - 1]);
            }
        }
    }

    #[test]
    fn printed_examples() {
        let s = build_scenario(Layout::OneWay, 1, 4).unwrap();
        assert_eq!(s.law, ErrorLaw::pure(NORMAL));
        assert_eq!(s.base_sizes, vec![4, 7, 10, 13, 15]);
        assert_eq!(s.scales, vec![1.0, 1.2, 1.5, 1.7, 2.0]);
        assert_eq!(s.label, "unbalanced-heteroscedastic (positive pairing)");

        let s = build_scenario(Layout::OneWay, 3, 2).unwrap();
        assert_eq!(s.law, ErrorLaw::pure(Family::Poisson { rate: 25.0 }));
        assert_eq!(s.base_sizes, vec![5, 5, 5, 5, 15]);
        assert_eq!(s.label, "unbalanced-homoscedastic");

        let s = build_scenario(Layout::TwoWay, 1, 5).unwrap();
        assert_eq!(s.base_sizes, vec![7, 7, 7, 7, 7, 4, 4, 4, 4, 4]);
        assert_eq!(s.scales, vec![2.0, 2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.label, "unbalanced-heteroscedastic (negative pairing)");
    }

    #[test]
    fn unknown_rows_are_registry_errors() {
        assert!(matches!(build_scenario(Layout::OneWay, 1, 10), Err(Error::Registry(_))));
        assert!(matches!(build_scenario(Layout::OneWay, 1, 0), Err(Error::Registry(_))));
        assert!(matches!(build_scenario(Layout::TwoWay, 4, 1), Err(Error::Registry(_))));
    }

    #[test]
    fn h0f_flags() {
        let false_rows: Vec<(u8, usize)> = registry(Layout::OneWay)
            .iter()
            .filter(|s| !s.h0f_holds())
            .map(|s| (s.setting, s.index))
            .collect();
        assert_eq!(false_rows, vec![(1, 3), (1, 4), (1, 5), (1, 8), (1, 9)]);
        let false_rows: Vec<(u8, usize)> = registry(Layout::TwoWay)
            .iter()
            .filter(|s| !s.h0f_holds())
            .map(|s| (s.setting, s.index))
            .collect();
        assert_eq!(false_rows, vec![(1, 3), (1, 4), (1, 5), (1, 7), (1, 8)]);
    }

    #[test]
    fn color_classes() {
        assert_eq!(
            ColorClass::from_label("unbalanced-heteroscedastic (positive pairing)"),
            Some(ColorClass::PositivePairing)
        );
        assert_eq!(
            ColorClass::from_label("balanced-homoscedastic with 15% outlier"),
            Some(ColorClass::ModerateOutlier)
        );
        assert_eq!(ColorClass::from_label("nonsense"), None);
        for layout in Layout::ALL {
            for s in registry(layout) {
                s.color_class();
            }
        }
    }
}

//! Built-in example manifolds with their expected classification and
//! verdict.

use crate::classify::{Classification, DecompositionType};
use crate::geometry::{IdentificationKind, SpecError};
use crate::spec::{
    Bound, DomainSpec, ExclusionSpec, IdentificationSpec, LoopSpec, SamplingSpec, SpecFile, Tolerances, FORMAT_VERSION,
};
use crate::split::{split_problem, SplitError, SplitReport, VerdictClass};
use serde::Serialize;
use thiserror::Error;

/// Expected values of the classification flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExpectedFlags {
    pub unit: bool,
    pub pregeodesic: bool,
    pub geodesic_unit: bool,
    pub irrotational: bool,
    pub orth_irrotational: bool,
    pub conformal: bool,
    pub orth_conformal: bool,
    pub parallel: bool,
    pub grad_div_e_parallel_e: bool,
}

impl ExpectedFlags {
    const PARALLEL: ExpectedFlags = ExpectedFlags {
        unit: true,
        pregeodesic: true,
        geodesic_unit: true,
        irrotational: true,
        orth_irrotational: true,
        conformal: true,
        orth_conformal: true,
        parallel: true,
        grad_div_e_parallel_e: true,
    };
    const CLOSED_CONFORMAL: ExpectedFlags = ExpectedFlags {
        unit: false,
        parallel: false,
        ..Self::PARALLEL
    };

    pub fn of(c: &Classification) -> Self {
        ExpectedFlags {
            unit: c.unit.holds,
            pregeodesic: c.pregeodesic.holds,
            geodesic_unit: c.geodesic_unit.holds,
            irrotational: c.irrotational.holds,
            orth_irrotational: c.orth_irrotational.holds,
            conformal: c.conformal.holds,
            orth_conformal: c.orth_conformal.holds,
            parallel: c.parallel.holds,
            grad_div_e_parallel_e: c.grad_div_e_parallel_e.holds,
        }
    }

    pub fn named(&self) -> [(&'static str, bool); 9] {
        [
            ("unit", self.unit),
            ("pregeodesic", self.pregeodesic),
            ("geodesic_unit", self.geodesic_unit),
            ("irrotational", self.irrotational),
            ("orth_irrotational", self.orth_irrotational),
            ("conformal", self.conformal),
            ("orth_conformal", self.orth_conformal),
            ("parallel", self.parallel),
            ("grad_div_e_parallel_e", self.grad_div_e_parallel_e),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Fixture {
    /// Catalog number, e.g. `"5"` or `"7a"`.
    pub id: &'static str,
    pub spec: SpecFile,
    pub flags: ExpectedFlags,
    pub decomposition: DecompositionType,
    pub verdict: VerdictClass,
    /// The example this fixture reproduces.
    pub source: &'static str,
    /// Properties stated for the example, not computed.
    pub metadata: &'static [&'static str],
}

impl Fixture {
    pub fn name(&self) -> &str {
        &self.spec.name
    }
}

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn b(x: &str) -> Bound {
    match x.parse::<f64>() {
        Ok(v) => Bound::Number(v),
        Err(_) => Bound::Text(x.into()),
    }
}

fn iv(v: &[(&str, &str)]) -> Vec<[Bound; 2]> {
    v.iter().map(|(lo, hi)| [b(lo), b(hi)]).collect()
}

fn translation(name: &str, map: &[&str]) -> IdentificationSpec {
    IdentificationSpec {
        name: name.into(),
        kind: IdentificationKind::Translation,
        map: s(map),
    }
}

fn single_loop(name: &str, seg: &[&str]) -> LoopSpec {
    LoopSpec {
        name: name.into(),
        segments: vec![s(seg)],
    }
}

struct Chart {
    name: &'static str,
    notes: &'static str,
    coords: &'static [&'static str],
    metric: Vec<Vec<String>>,
    field: Vec<String>,
    leaf: Option<&'static str>,
    idents: Vec<IdentificationSpec>,
    intervals: Vec<[Bound; 2]>,
    sample_box: Option<Vec<[Bound; 2]>>,
    exclusions: Vec<ExclusionSpec>,
    loops: Vec<LoopSpec>,
    sampling: SamplingSpec,
}

impl Chart {
    fn build(self) -> SpecFile {
        SpecFile {
            format_version: FORMAT_VERSION,
            name: self.name.into(),
            notes: self.notes.into(),
            dimension: self.coords.len(),
            coordinates: s(self.coords),
            metric: self.metric,
            field: self.field,
            leaf_function: self.leaf.map(Into::into),
            identifications: self.idents,
            domain: DomainSpec {
                intervals: self.intervals,
                sample_box: self.sample_box,
                exclusions: self.exclusions,
            },
            loops: self.loops,
            sampling: self.sampling,
            tolerances: Tolerances::default(),
        }
    }
}

/// Lower-triangular rows of a diagonal metric.
fn diagonal(entries: &[&str]) -> Vec<Vec<String>> {
    (0..entries.len())
        .map(|i| (0..=i).map(|j| if i == j { entries[i].to_string() } else { "0".into() }).collect())
        .collect()
}

fn s3_exclusions() -> Vec<ExclusionSpec> {
    ["psi", "theta"]
        .iter()
        .flat_map(|c| {
            ["0", "pi"].map(|centre| ExclusionSpec {
                coordinate: c.to_string(),
                center: b(centre),
                radius: 0.1,
            })
        })
        .collect()
}

/// `dt²` (or `−dt²`) plus `w(t)` times the round metric of `S³` in
/// hyperspherical angles.
fn s3_warped_metric(time: &str, w: &str) -> Vec<Vec<String>> {
    diagonal(&[
        time,
        w,
        &format!("{w}*sin(psi)^2"),
        &format!("{w}*sin(psi)^2*sin(theta)^2"),
    ])
}

const S3: &[&str] = &["t", "psi", "theta", "phi"];

fn phi_cycle() -> IdentificationSpec {
    translation("phi-cycle", &["t", "psi", "theta", "phi + 2*pi"])
}

fn sampling(t_span: (&str, &str)) -> SamplingSpec {
    SamplingSpec {
        t_span: [b(t_span.0), b(t_span.1)],
        ..SamplingSpec::default()
    }
}

#[allow(clippy::vec_init_then_push)]
pub fn catalog() -> Vec<Fixture> {
    let mut out = Vec::new();

    out.push(Fixture {
        id: "1",
        spec: Chart {
            name: "minkowski-torus",
            notes: "flat Lorentzian cylinder with x ~ x+1 and a tilted unit timelike parallel field",
            coords: &["t", "x"],
            metric: diagonal(&["-1", "1"]),
            field: s(&["sqrt(3/2)", "sqrt(1/2)"]),
            leaf: Some("-sqrt(3/2)*t + sqrt(1/2)*x"),
            idents: vec![translation("x-cycle", &["t", "x + 1"])],
            intervals: iv(&[("-inf", "inf"), ("0", "1")]),
            sample_box: Some(iv(&[("-1", "1"), ("0", "1")])),
            exclusions: vec![],
            loops: vec![single_loop("x-cycle", &["0", "tau"])],
            sampling: SamplingSpec {
                return_horizon: Some(100.0),
                ..sampling(("-1", "1"))
            },
        }
        .build(),
        flags: ExpectedFlags::PARALLEL,
        decomposition: DecompositionType::Direct,
        verdict: VerdictClass::NoSplitEvidence,
        source: "Minkowski torus with a tilted parallel field: causal, but does not split",
        metadata: &["causal", "not a product"],
    });

    out.push(Fixture {
        id: "2",
        spec: Chart {
            name: "warped-exp-circle",
            notes: "warped product of the line with a circle, warping function exp(t)",
            coords: &["t", "s"],
            metric: diagonal(&["-1", "exp(2*t)"]),
            field: s(&["exp(t)", "0"]),
            leaf: Some("t"),
            idents: vec![translation("s-cycle", &["t", "s + 2*pi"])],
            intervals: iv(&[("-inf", "inf"), ("0", "2*pi")]),
            sample_box: Some(iv(&[("-1", "1"), ("0", "2*pi")])),
            exclusions: vec![],
            loops: vec![],
            sampling: sampling(("-1", "1")),
        }
        .build(),
        flags: ExpectedFlags::CLOSED_CONFORMAL,
        decomposition: DecompositionType::Warped,
        verdict: VerdictClass::Line(DecompositionType::Warped),
        source: "warped product of the line and a circle with f = exp(t), U = exp(t) d/dt, divU > 0",
        metadata: &["Lorentzian", "warped"],
    });

    out.push(Fixture {
        id: "3",
        spec: Chart {
            name: "closed-friedmann",
            notes: "Friedmann-type model on (0.1, pi-0.1) x S^3; scale factor f = sin t",
            coords: S3,
            metric: s3_warped_metric("-1", "sin(t)^2"),
            field: s(&["sin(t)", "0", "0", "0"]),
            leaf: Some("t"),
            idents: vec![phi_cycle()],
            intervals: iv(&[("0.1", "pi - 0.1"), ("0", "pi"), ("0", "pi"), ("0", "2*pi")]),
            sample_box: None,
            exclusions: s3_exclusions(),
            loops: vec![],
            sampling: sampling(("-1.5", "1.5")),
        }
        .build(),
        flags: ExpectedFlags::CLOSED_CONFORMAL,
        decomposition: DecompositionType::Warped,
        verdict: VerdictClass::Interval(DecompositionType::Warped),
        source: "closed Friedmann cosmological model (0, pi) x_f S^3",
        metadata: &["compact leaves", "stand-in warping function"],
    });

    out.push(Fixture {
        id: "4",
        spec: Chart {
            name: "warped-s3-half",
            notes: "R x_f S^3(1/2) with f = sqrt(3 + sin 2t) and U = f d/dt",
            coords: S3,
            metric: s3_warped_metric("1", "(3 + sin(2*t))/4"),
            field: s(&["sqrt(3 + sin(2*t))", "0", "0", "0"]),
            leaf: Some("t"),
            idents: vec![phi_cycle()],
            intervals: iv(&[("-inf", "inf"), ("0", "pi"), ("0", "pi"), ("0", "2*pi")]),
            sample_box: Some(iv(&[("-1", "1"), ("0", "pi"), ("0", "pi"), ("0", "2*pi")])),
            exclusions: s3_exclusions(),
            loops: vec![],
            sampling: sampling(("-1", "1")),
        }
        .build(),
        flags: ExpectedFlags::CLOSED_CONFORMAL,
        decomposition: DecompositionType::Warped,
        verdict: VerdictClass::Line(DecompositionType::Warped),
        source: "complete Riemannian warped product R x_f S^3(1/2), f(t) = sqrt(3 + sin 2t)",
        metadata: &["complete", "Riemannian"],
    });

    out.push(Fixture {
        id: "5",
        spec: Chart {
            name: "warped-s3-quotient",
            notes: "quotient of warped-s3-half by eta(t, p) = (t + pi, -p)",
            coords: S3,
            metric: s3_warped_metric("1", "(3 + sin(2*t))/4"),
            field: s(&["sqrt(3 + sin(2*t))", "0", "0", "0"]),
            leaf: Some("t"),
            idents: vec![
                IdentificationSpec {
                    name: "deck".into(),
                    kind: IdentificationKind::General,
                    map: s(&["t + pi", "pi - psi", "pi - theta", "phi + pi"]),
                },
                phi_cycle(),
            ],
            intervals: iv(&[("-pi/2", "pi/2"), ("0", "pi"), ("0", "pi"), ("0", "2*pi")]),
            sample_box: None,
            exclusions: s3_exclusions(),
            loops: vec![single_loop("deck-loop", &["pi*tau", "pi/2", "pi/2", "pi*tau"])],
            sampling: sampling(("-1", "1")),
        }
        .build(),
        flags: ExpectedFlags::CLOSED_CONFORMAL,
        decomposition: DecompositionType::Warped,
        verdict: VerdictClass::CoveringOnly,
        source: "quotient of R x_f S^3(1/2) by (t, p) -> (t + pi, -p): periodic integral curves meeting each leaf twice",
        metadata: &["compact", "not a product S^1 x L"],
    });

    out.push(Fixture {
        id: "6",
        spec: Chart {
            name: "twisted-circle",
            notes: "twisted product (-1, inf) x S^1 with f(t, s) = t + 2 + cos s",
            coords: &["t", "s"],
            metric: diagonal(&["-1", "(t + 2 + cos(s))^2"]),
            field: s(&["1", "0"]),
            leaf: Some("t"),
            idents: vec![translation("s-cycle", &["t", "s + 2*pi"])],
            intervals: iv(&[("-1", "inf"), ("0", "2*pi")]),
            sample_box: Some(iv(&[("-0.5", "2"), ("0", "2*pi")])),
            exclusions: vec![],
            loops: vec![],
            sampling: SamplingSpec {
                base_point: Some(vec![b("0"), b("1")]),
                ..sampling(("-1.5", "1.5"))
            },
        }
        .build(),
        flags: ExpectedFlags {
            conformal: false,
            parallel: false,
            grad_div_e_parallel_e: false,
            ..ExpectedFlags::PARALLEL
        },
        decomposition: DecompositionType::Twisted,
        verdict: VerdictClass::Interval(DecompositionType::Twisted),
        source: "twisted product (-1, inf) x S^1, g = -dt^2 + (t + 2 + cos s)^2 ds^2, satisfying the divergence and Ricci hypotheses with equality",
        metadata: &["incomplete base", "twisted"],
    });

    for (id, name, sign) in [("7a", "flat-cylinder-lorentzian", "-1"), ("7b", "flat-cylinder-riemannian", "1")] {
        out.push(Fixture {
            id,
            spec: Chart {
                name,
                notes: "flat direct product of the line and a circle",
                coords: &["t", "s"],
                metric: diagonal(&[sign, "1"]),
                field: s(&["1", "0"]),
                leaf: Some("t"),
                idents: vec![translation("s-cycle", &["t", "s + 2*pi"])],
                intervals: iv(&[("-inf", "inf"), ("0", "2*pi")]),
                sample_box: Some(iv(&[("-1", "1"), ("0", "2*pi")])),
                exclusions: vec![],
                loops: vec![],
                sampling: sampling(("-1", "1")),
            }
            .build(),
            flags: ExpectedFlags::PARALLEL,
            decomposition: DecompositionType::Direct,
            verdict: VerdictClass::Line(DecompositionType::Direct),
            source: "control: flat direct product R x S^1",
            metadata: &["control"],
        });
    }

    out.push(Fixture {
        id: "8",
        spec: Chart {
            name: "flat-torus",
            notes: "flat torus with t ~ t + 2 pi and E = d/dt",
            coords: &["t", "s"],
            metric: diagonal(&["1", "1"]),
            field: s(&["1", "0"]),
            leaf: Some("t"),
            idents: vec![
                translation("t-cycle", &["t + 2*pi", "s"]),
                translation("s-cycle", &["t", "s + 2*pi"]),
            ],
            intervals: iv(&[("-pi", "pi"), ("0", "2*pi")]),
            sample_box: None,
            exclusions: vec![],
            loops: vec![
                single_loop("t-loop", &["-pi + 2*pi*tau", "pi"]),
                single_loop("s-loop", &["0", "2*pi*tau"]),
            ],
            sampling: sampling(("-1", "1")),
        }
        .build(),
        flags: ExpectedFlags::PARALLEL,
        decomposition: DecompositionType::Direct,
        verdict: VerdictClass::Circle(DecompositionType::Direct),
        source: "control: flat S^1 x S^1 with periodic integral curves and trivial monodromy",
        metadata: &["control", "compact"],
    });

    out.push(Fixture {
        id: "9",
        spec: Chart {
            name: "nongeodesic-plane",
            notes: "Euclidean annulus in polar coordinates; U = (2 + sin theta) grad h with h = r (2 + cos theta)",
            coords: &["r", "theta"],
            metric: diagonal(&["1", "r^2"]),
            field: s(&[
                "(2 + sin(theta))*(2 + cos(theta))",
                "-(2 + sin(theta))*sin(theta)/r",
            ]),
            leaf: Some("r*(2 + cos(theta))"),
            idents: vec![translation("theta-cycle", &["r", "theta + 2*pi"])],
            intervals: iv(&[("0.5", "3"), ("0", "2*pi")]),
            sample_box: None,
            exclusions: vec![],
            loops: vec![],
            sampling: sampling(("-0.5", "0.5")),
        }
        .build(),
        flags: ExpectedFlags {
            unit: false,
            pregeodesic: false,
            geodesic_unit: false,
            irrotational: false,
            conformal: false,
            parallel: false,
            grad_div_e_parallel_e: false,
            // one-dimensional leaves: both conditions hold trivially
            orth_irrotational: true,
            orth_conformal: true,
        },
        decomposition: DecompositionType::Parametrized,
        verdict: VerdictClass::NoSplitEvidence,
        source: "falsification control: unit field of a non-irrotational field in the plane",
        metadata: &["control"],
    });

    out.push(Fixture {
        id: "10",
        spec: Chart {
            name: "irrational-torus",
            notes: "flat unit torus with U = d/dx + sqrt(2) d/dy",
            coords: &["x", "y"],
            metric: diagonal(&["1", "1"]),
            field: s(&["1", "sqrt(2)"]),
            leaf: Some("x + sqrt(2)*y"),
            idents: vec![
                translation("x-cycle", &["x + 1", "y"]),
                translation("y-cycle", &["x", "y + 1"]),
            ],
            intervals: iv(&[("0", "1"), ("0", "1")]),
            sample_box: None,
            exclusions: vec![],
            loops: vec![single_loop("x-loop", &["tau", "0"]), single_loop("y-loop", &["0", "tau"])],
            sampling: sampling(("-0.5", "0.5")),
        }
        .build(),
        flags: ExpectedFlags {
            unit: false,
            ..ExpectedFlags::PARALLEL
        },
        decomposition: DecompositionType::Direct,
        verdict: VerdictClass::NoSplitEvidence,
        source: "two loops with periods 1 and sqrt(2): dense period group",
        metadata: &["synthetic", "dense period group"],
    });

    out
}

/// Looks a fixture up by catalog id or name.
pub fn find(key: &str) -> Option<Fixture> {
    catalog().into_iter().find(|f| f.id == key || f.spec.name == key)
}

#[derive(Debug, Clone, Error)]
pub enum FixtureError {
    #[error("fixture `{name}` failed validation: {source}")]
    Spec { name: String, source: SpecError },
    #[error("fixture `{name}`: {source}")]
    Split { name: String, source: SplitError },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlagCheck {
    pub flag: &'static str,
    pub expected: bool,
    pub actual: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureCheck {
    pub id: &'static str,
    pub name: String,
    pub flag_mismatches: Vec<FlagCheck>,
    pub expected_decomposition: DecompositionType,
    pub decomposition: DecompositionType,
    pub expected_verdict: VerdictClass,
    pub verdict: VerdictClass,
    pub verdict_text: String,
}

impl FixtureCheck {
    pub fn passed(&self) -> bool {
        self.flag_mismatches.is_empty()
            && self.expected_decomposition == self.decomposition
            && self.expected_verdict == self.verdict
    }
}

/// Builds the fixture, runs the split pipeline and compares with the
/// expectations.
pub fn run_fixture(f: &Fixture) -> Result<(FixtureCheck, SplitReport), FixtureError> {
    let name = f.spec.name.clone();
    let problem = f.spec.build().map_err(|source| FixtureError::Spec {
        name: name.clone(),
        source,
    })?;
    let report = split_problem(&problem).map_err(|source| FixtureError::Split {
        name: name.clone(),
        source,
    })?;
    let actual = ExpectedFlags::of(&report.classification);
    let flag_mismatches = f
        .flags
        .named()
        .iter()
        .zip(actual.named())
        .filter(|(e, a)| e.1 != a.1)
        .map(|(e, a)| FlagCheck {
            flag: e.0,
            expected: e.1,
            actual: a.1,
        })
        .collect();
    let check = FixtureCheck {
        id: f.id,
        name,
        flag_mismatches,
        expected_decomposition: f.decomposition,
        decomposition: report.decomposition,
        expected_verdict: f.verdict,
        verdict: report.verdict.class,
        verdict_text: report.verdict.text.clone(),
    };
    Ok((check, report))
}

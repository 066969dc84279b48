use std::sync::Arc;

use nalgebra::DVector;

use super::{
    kernel_basis, BasisFn, CasimirClaim, CatalogEntry, CatalogReduction, OracleMatrix, ParamKind, ParamSpec, Params,
    ReducibilitySetup, BUILD_CHECK_POINTS, BUILD_CHECK_SEED, BUILD_CHECK_TOL,
};
use crate::bracket::{CoordinateChart, LeibnizSystem, LeibnizTensorField, ScalarField, Side, SmoothMap, Symmetry};
use crate::dynamics::Monitor;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::nonholonomic::{constrained_system, ConstraintSpec};
use crate::sampling::{rng_from_seed, SampleBox};
use crate::symmetry::{reduce_by_invariants, ActionSpec, GroupAction, InvariantReduction, MomentumMapSpec};

pub(super) struct Builder {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
    pub build: fn(&Params) -> Result<CatalogEntry>,
}

const fn num(name: &'static str, default: &'static str, doc: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        kind: ParamKind::Number,
        default,
        doc,
    }
}

const PRINTED: ParamSpec = ParamSpec {
    name: "printed",
    kind: ParamKind::Flag,
    default: "0",
    doc: "1 selects the displayed matrix verbatim instead of the computed reduction",
};

pub(super) static CATALOG: &[Builder] = &[
    Builder {
        name: "canonical",
        description: "Canonical Poisson tensor on R^2n with coordinates (q, p) and the harmonic oscillator \
                      H = (|q|^2 + |p|^2)/2; rotation in each (q_i, p_i) plane is a symmetry with J = H and \
                      integrating factor 1. Box [-2,2]^2n.",
        params: &[ParamSpec {
            name: "n",
            kind: ParamKind::Integer,
            default: "1",
            doc: "degrees of freedom, 1..=8",
        }],
        build: canonical,
    },
    Builder {
        name: "canonical6",
        description: "Free particle on R^6 with coordinates (x, y, z, p_x, p_y, p_z), canonical tensor and \
                      H = |p|^2/2; translations in x, y, z have momentum map (p_x, p_y, p_z). Box [-2,2]^6.",
        params: &[],
        build: canonical6,
    },
    Builder {
        name: "pseudometric",
        description: "Symmetric bracket of a (pseudo-)metric g: B = g^{-1}, H = |x|^2/2. The metric is given \
                      as expression rows; the regular domain is det g != 0. Box [-2,2]^n.",
        params: &[ParamSpec {
            name: "metric",
            kind: ParamKind::Matrix,
            default: "1,0;0,1",
            doc: "symmetric n x n metric, n <= 4; coordinates x,y,z or x1..x4",
        }],
        build: pseudometric,
    },
    Builder {
        name: "three-wave",
        description: "Three-wave interaction as a pseudometric system: B = diag(s1 g1, -s2 g2, s3 g3), \
                      H = xyz. X^R_H is the bracket-generated flow, so the y equation reads -s2 g2 x z. \
                      Momentum map J = ((x^2/(s1 g1) - z^2/(s3 g3))/2, -(y^2/(s2 g2) + z^2/(s3 g3))/2) for \
                      generators (x,0,-z), (0,y,-z) with integrating factors -1. Box [-2,2]^3.",
        params: &[
            num("s1", "1", "sign, +1 or -1"),
            num("s2", "1", "sign, +1 or -1"),
            num("s3", "-1", "sign, +1 or -1"),
            num("g1", "1", "nonzero coupling, g1+g2+g3 = 0"),
            num("g2", "1", "nonzero coupling"),
            num("g3", "-2", "nonzero coupling"),
        ],
        build: three_wave,
    },
    Builder {
        name: "landau-lifschitz",
        description: "Landau-Lifschitz magnetization dynamics: B = [M]x + (lambda/(gamma |M|^2)) (M M^T - \
                      |M|^2 I), H = gamma B.M, so X^R_H = gamma M x B + (lambda/|M|^2) M x (M x B). \
                      Skew part is the so(3) Lie-Poisson tensor, symmetric part the double bracket. Regular \
                      domain M != 0. With B along e3, rotations about e3 reduce to sigma1 = (M1^2+M2^2)/2, \
                      sigma2 = M3. Box [-2,2]^3.",
        params: &[
            num("gamma", "1", "gyromagnetic ratio, nonzero"),
            num("lambda", "0.1", "damping"),
            num("b1", "0", "field component"),
            num("b2", "0", "field component"),
            num("b3", "1", "field component"),
        ],
        build: landau_lifschitz,
    },
    Builder {
        name: "rigid-body-dissipative",
        description: "Rigid body with double-bracket dissipation: B = [M]x + alpha (M M^T - |M|^2 I), \
                      H = sum M_i^2/(2 I_i). For alpha = 0 the tensor is Lie-Poisson and |M|^2/2 is a \
                      Casimir; for alpha > 0 H decreases. Regular domain M != 0. With I1 = I2, rotations \
                      about e3 reduce to sigma1 = (M1^2+M2^2)/2, sigma2 = M3. Box [-2,2]^3.",
        params: &[
            num("I1", "1", "principal moment, > 0"),
            num("I2", "2", "principal moment, > 0"),
            num("I3", "3", "principal moment, > 0"),
            num("alpha", "0.1", "dissipation strength"),
        ],
        build: rigid_body,
    },
    Builder {
        name: "noncanonical-r3",
        description: "Skew tensor [[0,x,y],[-x,0,x],[-y,-x,0]] on R^3 with H = (x^2+y^2)/2 and the \
                      non-canonical action (x, y, e^a z); the Jacobiator of x,y,z equals y, so the tensor is \
                      not Poisson. Reduction by sigma = (x, y) with section (x, y, 1) gives [[0,x],[-x,0]]. \
                      Regular domain z != 0. Box [-2,2]^3.",
        params: &[],
        build: noncanonical_r3,
    },
    Builder {
        name: "upper-half-plane",
        description: "Canonical tensor on the upper half-plane y > 0 with H = x^2/2. For the Lie algebra \
                      element xi the generator is (0, e^xi y), J^xi = xi x and the integrating factor is \
                      -xi/(e^xi y). Box [-2,2] x [0.1,3].",
        params: &[num("xi", "1", "Lie algebra element")],
        build: upper_half_plane,
    },
    Builder {
        name: "constrained-particle",
        description: "Free particle on R^6 constrained by phi = p_x + y p_z - a with complement \
                      w = d/dp_x + y d/dp_z: B~ = pi B with pi = I - w dphi/(1+y^2). Built through the \
                      nonholonomic construction and checked against the displayed pi and B~ at build time. \
                      Translations in y have J = p_y + p_x + y p_z with factor 1; translations in x, z \
                      reduce to (y, p_x, p_y, p_z). Box [-2,2]^6.",
        params: &[num("a", "0", "constraint level")],
        build: constrained_particle,
    },
    Builder {
        name: "constrained-particle-reduced-1",
        description: "First reduction of the constrained particle on (y, p_x, p_y, p_z), H = |p|^2/2. By \
                      default the tensor is the computed reduction; printed=1 selects the displayed matrix, \
                      whose first column differs (the displayed column is that of z). Claims: p_y and \
                      p_x + y p_z left Casimirs, p_x and p_z right Casimirs, H equivalent to p_y^2/2. \
                      Box [-2,2]^4.",
        params: &[PRINTED],
        build: constrained_reduced_1,
    },
    Builder {
        name: "constrained-particle-reduced-2",
        description: "Second reduction of the constrained particle on (y, p_y) with h = p_y^2/2. By \
                      default the tensor is the computed reduction [[0,1],[-1,0]]; printed=1 selects the \
                      displayed [[0,1],[0,0]]. Box [-2,2]^2.",
        params: &[PRINTED],
        build: constrained_reduced_2,
    },
];

/// An entry with only the mandatory parts; the rest is filled by builders.
fn base(system: LeibnizSystem, sample_box: SampleBox, default_x0: Vec<f64>) -> CatalogEntry {
    let h = Monitor::new("H", system.hamiltonian().clone());
    CatalogEntry {
        name: String::new(),
        description: String::new(),
        params: Default::default(),
        system,
        sample_box,
        default_x0,
        monitors: vec![h],
        casimirs: Vec::new(),
        equivalent_hamiltonian: None,
        constraint: None,
        action: None,
        momentum: None,
        reduction: None,
        reducibility: None,
        parts: Vec::new(),
        oracles: Vec::new(),
    }
}

fn chart(names: &[&str]) -> Result<Arc<CoordinateChart>> {
    CoordinateChart::new(names.iter().copied())
}

fn field(chart: &Arc<CoordinateChart>, src: &str, p: &Params) -> Result<ScalarField> {
    ScalarField::parse_with(chart, src, p.constants())
}

fn map(chart: &Arc<CoordinateChart>, comps: &[&str], p: &Params) -> Result<SmoothMap> {
    let c: Vec<String> = comps.iter().map(|s| s.to_string()).collect();
    SmoothMap::parse_with(chart, &c, p.constants())
}

fn tensor(chart: &Arc<CoordinateChart>, rows: &[&[&str]], p: &Params, sym: Symmetry) -> Result<LeibnizTensorField> {
    let r: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
    LeibnizTensorField::parse_with(chart, &r, p.constants(), sym)
}

fn tensor_owned(chart: &Arc<CoordinateChart>, rows: &[Vec<String>], p: &Params, sym: Symmetry) -> Result<LeibnizTensorField> {
    LeibnizTensorField::parse_with(chart, rows, p.constants(), sym)
}

fn canonical_rows(n: usize) -> Vec<Vec<String>> {
    (0..2 * n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j == i + n {
                        "1".to_string()
                    } else if i == j + n {
                        "-1".to_string()
                    } else {
                        "0".to_string()
                    }
                })
                .collect()
        })
        .collect()
}

fn canonical(p: &Params) -> Result<CatalogEntry> {
    let n = p.num("n") as usize;
    if !(1..=8).contains(&n) {
        return Err(Error::Parameter(format!("n = {n} must lie in 1..=8")));
    }
    let names: Vec<String> = if n == 1 {
        vec!["q".into(), "p".into()]
    } else {
        (1..=n).map(|i| format!("q{i}")).chain((1..=n).map(|i| format!("p{i}"))).collect()
    };
    let ch = CoordinateChart::new(names.iter().map(String::as_str))?;
    let b = tensor_owned(&ch, &canonical_rows(n), p, Symmetry::Skew)?;
    let h_src = names.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join(" + ");
    let h = field(&ch, &format!("({h_src})/2"), p)?;
    let system = LeibnizSystem::new(b, h.clone())?;
    let gen: Vec<String> = names[n..]
        .iter()
        .cloned()
        .chain(names[..n].iter().map(|q| format!("-{q}")))
        .collect();
    let gen = SmoothMap::parse_with(&ch, &gen, &[])?;
    let mut x0 = vec![0.0; 2 * n];
    x0[0] = 1.0;
    let mut e = base(system, SampleBox::cube(2 * n, -2.0, 2.0), x0);
    e.action = Some(ActionSpec::new(vec![gen], None)?);
    e.momentum = Some(MomentumMapSpec::new(vec![h], vec![Some(field(&ch, "1", p)?)])?);
    Ok(e)
}

fn canonical6(p: &Params) -> Result<CatalogEntry> {
    let ch = chart(&["x", "y", "z", "p_x", "p_y", "p_z"])?;
    let b = tensor_owned(&ch, &canonical_rows(3), p, Symmetry::Skew)?;
    let system = LeibnizSystem::new(b, field(&ch, "(p_x^2 + p_y^2 + p_z^2)/2", p)?)?;
    let gens = [
        ["1", "0", "0", "0", "0", "0"],
        ["0", "1", "0", "0", "0", "0"],
        ["0", "0", "1", "0", "0", "0"],
    ]
    .iter()
    .map(|g| map(&ch, g, p))
    .collect::<Result<Vec<_>>>()?;
    let group = GroupAction::parse(&ch, &["b1", "b2", "b3"], &["x + b1", "y + b2", "z + b3", "p_x", "p_y", "p_z"], &[])?;
    let js = ["p_x", "p_y", "p_z"].iter().map(|s| field(&ch, s, p)).collect::<Result<Vec<_>>>()?;
    let one = field(&ch, "1", p)?;
    let mut e = base(system, SampleBox::cube(6, -2.0, 2.0), vec![0.0, 1.0, 0.0, 1.0, 1.0, -1.0]);
    e.action = Some(ActionSpec::new(gens, Some(group))?);
    e.momentum = Some(MomentumMapSpec::new(js, vec![Some(one.clone()), Some(one.clone()), Some(one)])?);
    Ok(e)
}

fn det(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        n => Expr::sum((0..n).filter(|&j| !m[0][j].is_zero()).map(|j| {
            let t = Expr::mul(m[0][j].clone(), det(&minor(m, 0, j)));
            if j % 2 == 0 {
                t
            } else {
                Expr::neg(t)
            }
        })),
    }
}

fn minor(m: &[Vec<Expr>], r: usize, c: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, e)| e.clone()).collect())
        .collect()
}

fn pseudometric(p: &Params) -> Result<CatalogEntry> {
    let rows: Vec<Vec<&str>> = p.text("metric").split(';').map(|r| r.split(',').map(str::trim).collect()).collect();
    let n = rows.len();
    if n == 0 || n > 4 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parameter(format!("metric must be a square table of size 1..=4, got {} rows", n)));
    }
    let names: Vec<String> = match n {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=n).map(|i| format!("x{i}")).collect(),
    };
    let ch = CoordinateChart::new(names.iter().map(String::as_str))?;
    let g = rows
        .iter()
        .map(|r| r.iter().map(|s| ch.parse_with(s, p.constants())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let d = det(&g);
    if d.as_num() == Some(0.0) {
        return Err(Error::Parameter("metric is singular".into()));
    }
    // g^{-1}_{ij} = C_{ji} / det g with C the cofactor matrix
    let inv: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = det(&minor(&g, j, i));
                    let c = if (i + j) % 2 == 0 { c } else { Expr::neg(c) };
                    Expr::div(c, d.clone())
                })
                .collect()
        })
        .collect();
    let metric = LeibnizTensorField::symbolic(&ch, g, Symmetry::Symmetric)?;
    let b = LeibnizTensorField::symbolic(&ch, inv, Symmetry::Symmetric)?;
    let h_src = names.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join(" + ");
    let system = LeibnizSystem::new(b, field(&ch, &format!("({h_src})/2"), p)?)?
        .with_domain(ScalarField::symbolic(&ch, Expr::powi(d, 2))?)?;
    let mut x0 = vec![0.0; n];
    x0[0] = 1.0;
    let mut e = base(system, SampleBox::cube(n, -2.0, 2.0), x0);
    e.parts.push(("metric".into(), metric));
    Ok(e)
}

fn three_wave(p: &Params) -> Result<CatalogEntry> {
    for s in ["s1", "s2", "s3"] {
        if p.num(s).abs() != 1.0 {
            return Err(Error::Parameter(format!("{s} = {} must be +1 or -1", p.num(s))));
        }
    }
    let g = [p.num("g1"), p.num("g2"), p.num("g3")];
    if g.contains(&0.0) {
        return Err(Error::Parameter("couplings g1, g2, g3 must be nonzero".into()));
    }
    if (g[0] + g[1] + g[2]).abs() > 1e-12 {
        return Err(Error::Parameter(format!("g1 + g2 + g3 = {} must vanish", g[0] + g[1] + g[2])));
    }
    let ch = chart(&["x", "y", "z"])?;
    let b = tensor(
        &ch,
        &[&["s1*g1", "0", "0"], &["0", "-s2*g2", "0"], &["0", "0", "s3*g3"]],
        p,
        Symmetry::Symmetric,
    )?;
    let system = LeibnizSystem::new(b, field(&ch, "x*y*z", p)?)?;
    let gens = vec![map(&ch, &["x", "0", "-z"], p)?, map(&ch, &["0", "y", "-z"], p)?];
    let group = GroupAction::parse(&ch, &["a", "b"], &["exp(a)*x", "exp(b)*y", "exp(-a-b)*z"], &[])?;
    let j1 = field(&ch, "(x^2/(s1*g1) - z^2/(s3*g3))/2", p)?;
    let j2 = field(&ch, "-(y^2/(s2*g2) + z^2/(s3*g3))/2", p)?;
    let minus_one = field(&ch, "-1", p)?;
    let mut e = base(system, SampleBox::cube(3, -2.0, 2.0), vec![1.0, 1.0, 1.0]);
    e.monitors.push(Monitor::new("J0", j1.clone()));
    e.monitors.push(Monitor::new("J1", j2.clone()));
    e.action = Some(ActionSpec::new(gens, Some(group))?);
    e.momentum = Some(MomentumMapSpec::new(vec![j1, j2], vec![Some(minus_one.clone()), Some(minus_one)])?);
    e.oracles.push(OracleMatrix::parse(
        "metric",
        &ch,
        &[&["1/(s1*g1)", "0", "0"], &["0", "-1/(s2*g2)", "0"], &["0", "0", "1/(s3*g3)"]],
        p.constants(),
    )?);
    e.oracles.push(OracleMatrix::parse(
        "ode",
        &ch,
        &[&["s1*g1*y*z"], &["s2*g2*x*z"], &["s3*g3*x*y"]],
        p.constants(),
    )?);
    Ok(e)
}

const SO3: [[&str; 3]; 3] = [["0", "-M3", "M2"], ["M3", "0", "-M1"], ["-M2", "M1", "0"]];
const DOUBLE_BRACKET: [[&str; 3]; 3] = [
    ["-(M2^2 + M3^2)", "M1*M2", "M1*M3"],
    ["M1*M2", "-(M1^2 + M3^2)", "M2*M3"],
    ["M1*M3", "M2*M3", "-(M1^2 + M2^2)"],
];

/// Skew `[M]x` and symmetric `c·(M Mᵀ − |M|²I)` parts and their sum.
fn double_bracket_parts(
    ch: &Arc<CoordinateChart>,
    coefficient: &str,
    p: &Params,
) -> Result<(LeibnizTensorField, LeibnizTensorField, LeibnizTensorField)> {
    let skew: Vec<Vec<String>> = SO3.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    let sym: Vec<Vec<String>> = DOUBLE_BRACKET
        .iter()
        .map(|r| r.iter().map(|s| format!("({coefficient})*({s})")).collect())
        .collect();
    let full: Vec<Vec<String>> = (0..3)
        .map(|i| (0..3).map(|j| format!("{} + {}", SO3[i][j], sym[i][j])).collect())
        .collect();
    Ok((
        tensor_owned(ch, &skew, p, Symmetry::Skew)?,
        tensor_owned(ch, &sym, p, Symmetry::Symmetric)?,
        tensor_owned(ch, &full, p, Symmetry::General)?,
    ))
}

/// Rotations about e3 with invariants `((M1²+M2²)/2, M3)` and section
/// `(sqrt(2 s1), 0, s2)`.
fn axial_reduction(ch: &Arc<CoordinateChart>, source: LeibnizSystem, p: &Params) -> Result<CatalogReduction> {
    let gen = map(ch, &["-M2", "M1", "0"], p)?;
    let group = GroupAction::parse(
        ch,
        &["t"],
        &["cos(t)*M1 - sin(t)*M2", "sin(t)*M1 + cos(t)*M2", "M3"],
        &[],
    )?;
    let reduction = InvariantReduction::parse(
        ch,
        &["s1", "s2"],
        &["(M1^2 + M2^2)/2", "M3"],
        &["sqrt(2*s1)", "0", "s2"],
        p.constants(),
    )?;
    Ok(CatalogReduction {
        source,
        reduction,
        action: ActionSpec::new(vec![gen], Some(group))?,
        reduced_box: SampleBox::new(vec![0.05, -2.0], vec![2.0, 2.0])?,
        group_box: SampleBox::new(vec![-std::f64::consts::PI], vec![std::f64::consts::PI])?,
    })
}

fn reduced_pattern(p: &Params) -> Result<OracleMatrix> {
    let rc = chart(&["s1", "s2"])?;
    OracleMatrix::parse("pattern", &rc, &[&["-2*s1*s2^2", "2*s1*s2"], &["2*s1*s2", "-2*s1"]], p.constants())
}

fn landau_lifschitz(p: &Params) -> Result<CatalogEntry> {
    if p.num("gamma") == 0.0 {
        return Err(Error::Parameter("gamma must be nonzero".into()));
    }
    let ch = chart(&["M1", "M2", "M3"])?;
    let (skew, sym, full) = double_bracket_parts(&ch, "lambda/(gamma*(M1^2 + M2^2 + M3^2))", p)?;
    let system = LeibnizSystem::new(full, field(&ch, "gamma*(b1*M1 + b2*M2 + b3*M3)", p)?)?
        .with_domain(field(&ch, "M1^2 + M2^2 + M3^2", p)?)?;
    let mut e = base(system.clone(), SampleBox::cube(3, -2.0, 2.0), vec![1.0, 0.5, 0.2]);
    e.parts.push(("skew".into(), skew));
    e.parts.push(("symmetric".into(), sym));
    if p.num("b1") == 0.0 && p.num("b2") == 0.0 {
        let red = axial_reduction(&ch, system, p)?;
        e.action = Some(red.action.clone());
        e.reduction = Some(red);
        e.oracles.push(reduced_pattern(p)?);
        let rc = chart(&["s1", "s2"])?;
        e.oracles.push(OracleMatrix::parse("printed_prefactor", &rc, &[&["gamma/(2*s1 + s2^2)"]], p.constants())?);
    }
    Ok(e)
}

fn rigid_body(p: &Params) -> Result<CatalogEntry> {
    for i in ["I1", "I2", "I3"] {
        if !(p.num(i) > 0.0) {
            return Err(Error::Parameter(format!("{i} = {} must be positive", p.num(i))));
        }
    }
    let ch = chart(&["M1", "M2", "M3"])?;
    let alpha = p.num("alpha");
    let (skew, sym, full) = double_bracket_parts(&ch, "alpha", p)?;
    let full = if alpha == 0.0 {
        LeibnizTensorField::symbolic(&ch, full.entries().expect("symbolic"), Symmetry::Skew)?
    } else {
        full
    };
    let system = LeibnizSystem::new(full, field(&ch, "M1^2/(2*I1) + M2^2/(2*I2) + M3^2/(2*I3)", p)?)?
        .with_domain(field(&ch, "M1^2 + M2^2 + M3^2", p)?)?;
    let mut e = base(system.clone(), SampleBox::cube(3, -2.0, 2.0), vec![1.0, 0.5, -0.3]);
    let c = field(&ch, "(M1^2 + M2^2 + M3^2)/2", p)?;
    e.monitors.push(Monitor::new("C", c.clone()));
    if alpha == 0.0 {
        e.casimirs.push(CasimirClaim {
            label: "|M|^2/2".into(),
            field: c.clone(),
            side: Side::Left,
        });
        e.casimirs.push(CasimirClaim {
            label: "|M|^2/2".into(),
            field: c,
            side: Side::Right,
        });
    }
    e.parts.push(("skew".into(), skew));
    e.parts.push(("symmetric".into(), sym));
    if p.num("I1") == p.num("I2") {
        let red = axial_reduction(&ch, system, p)?;
        e.action = Some(red.action.clone());
        e.reduction = Some(red);
        e.oracles.push(reduced_pattern(p)?);
    }
    Ok(e)
}

fn noncanonical_r3(p: &Params) -> Result<CatalogEntry> {
    let ch = chart(&["x", "y", "z"])?;
    let b = tensor(&ch, &[&["0", "x", "y"], &["-x", "0", "x"], &["-y", "-x", "0"]], p, Symmetry::Skew)?;
    let system = LeibnizSystem::new(b, field(&ch, "(x^2 + y^2)/2", p)?)?.with_domain(field(&ch, "z^2", p)?)?;
    let gen = map(&ch, &["0", "0", "z"], p)?;
    let group = GroupAction::parse(&ch, &["a"], &["x", "y", "exp(a)*z"], &[])?;
    let action = ActionSpec::new(vec![gen], Some(group))?;
    let reduction = InvariantReduction::parse(&ch, &["x", "y"], &["x", "y"], &["x", "y", "1"], p.constants())?;
    let mut e = base(system.clone(), SampleBox::cube(3, -2.0, 2.0), vec![1.0, 0.5, 1.0]);
    e.action = Some(action.clone());
    e.reduction = Some(CatalogReduction {
        source: system,
        reduction,
        action,
        reduced_box: SampleBox::cube(2, -2.0, 2.0),
        group_box: SampleBox::new(vec![-1.0], vec![1.0])?,
    });
    let rc = chart(&["x", "y"])?;
    e.oracles.push(OracleMatrix::parse("reduced", &rc, &[&["0", "x"], &["-x", "0"]], p.constants())?);
    Ok(e)
}

fn upper_half_plane(p: &Params) -> Result<CatalogEntry> {
    let ch = chart(&["x", "y"])?;
    let b = tensor(&ch, &[&["0", "1"], &["-1", "0"]], p, Symmetry::Skew)?;
    let system = LeibnizSystem::new(b, field(&ch, "x^2/2", p)?)?.with_domain(field(&ch, "y", p)?)?;
    let gen = map(&ch, &["0", "exp(xi)*y"], p)?;
    let group = GroupAction::parse(&ch, &["b"], &["x", "exp(b)*y"], &[])?;
    let j = field(&ch, "xi*x", p)?;
    let f = field(&ch, "-xi/(exp(xi)*y)", p)?;
    let mut e = base(system, SampleBox::new(vec![-2.0, 0.1], vec![2.0, 3.0])?, vec![0.1, 1.5]);
    e.monitors.push(Monitor::new("J0", j.clone()));
    e.action = Some(ActionSpec::new(vec![gen], Some(group))?);
    e.momentum = Some(MomentumMapSpec::new(vec![j], vec![Some(f)])?);
    Ok(e)
}

const PARTICLE: [&str; 6] = ["x", "y", "z", "p_x", "p_y", "p_z"];

const PRINTED_PI: [[&str; 6]; 6] = [
    ["1", "0", "0", "0", "0", "0"],
    ["0", "1", "0", "0", "0", "0"],
    ["0", "0", "1", "0", "0", "0"],
    ["0", "-p_z/(1+y^2)", "0", "y^2/(1+y^2)", "0", "-y/(1+y^2)"],
    ["0", "0", "0", "0", "1", "0"],
    ["0", "-y*p_z/(1+y^2)", "0", "-y/(1+y^2)", "0", "1/(1+y^2)"],
];

const PRINTED_B: [[&str; 6]; 6] = [
    ["0", "0", "0", "1", "0", "0"],
    ["0", "0", "0", "0", "1", "0"],
    ["0", "0", "0", "0", "0", "1"],
    ["-y^2/(1+y^2)", "0", "y/(1+y^2)", "0", "-p_z/(1+y^2)", "0"],
    ["0", "-1", "0", "0", "0", "0"],
    ["y/(1+y^2)", "0", "-1/(1+y^2)", "0", "-y*p_z/(1+y^2)", "0"],
];

const PRINTED_ODE: [&str; 6] = ["p_x", "p_y", "p_z", "-p_z*p_y/(1+y^2)", "0", "-y*p_z*p_y/(1+y^2)"];

const PRINTED_B1: [[&str; 4]; 4] = [
    ["0", "0", "1", "0"],
    ["y/(1+y^2)", "0", "-p_z/(1+y^2)", "0"],
    ["0", "0", "0", "0"],
    ["-1/(1+y^2)", "0", "-y*p_z/(1+y^2)", "0"],
];

const PRINTED_B2: [[&str; 2]; 2] = [["0", "1"], ["0", "0"]];

fn rows_of<'a, const N: usize>(m: &'a [[&'static str; N]]) -> Vec<&'a [&'static str]> {
    m.iter().map(|r| r.as_slice()).collect()
}

fn constrained_particle(p: &Params) -> Result<CatalogEntry> {
    let ch = chart(&PARTICLE)?;
    let b = tensor_owned(&ch, &canonical_rows(3), p, Symmetry::Skew)?;
    let ambient = LeibnizSystem::new(b, field(&ch, "(p_x^2 + p_y^2 + p_z^2)/2", p)?)?;
    let phi = field(&ch, "p_x + y*p_z - a", p)?;
    let w = map(&ch, &["0", "0", "0", "1", "0", "y"], p)?;
    let spec = ConstraintSpec::new(ambient, vec![phi.clone()], vec![w])?;
    let system = constrained_system(&spec)?;
    let pi = OracleMatrix::parse("pi", &ch, &rows_of(&PRINTED_PI), p.constants())?;
    let bt = OracleMatrix::parse("B_tilde", &ch, &rows_of(&PRINTED_B), p.constants())?;
    let ode_rows: Vec<&[&str]> = PRINTED_ODE.iter().map(std::slice::from_ref).collect();
    let ode = OracleMatrix::parse("ode", &ch, &ode_rows, p.constants())?;

    // both routes must agree before the entry is handed out
    let sample_box = SampleBox::cube(6, -2.0, 2.0);
    let mut rng = rng_from_seed(BUILD_CHECK_SEED);
    for m in sample_box.sample(&mut rng, BUILD_CHECK_POINTS, |_| true)? {
        let built = [spec.projector_at(&m)?, system.tensor().matrix_at(&m)?];
        let printed = [pi.eval(&m)?, bt.eval(&m)?];
        for (x, y) in built.iter().zip(&printed) {
            let gap = (x - y).amax();
            if !(gap <= BUILD_CHECK_TOL) {
                return Err(Error::Precondition(format!(
                    "constructed and displayed constrained matrices differ by {gap:e} at {m:?}"
                )));
            }
        }
    }

    let gen = map(&ch, &["0", "1", "0", "0", "0", "0"], p)?;
    let group_y = GroupAction::parse(&ch, &["b"], &["x", "y + b", "z", "p_x", "p_y", "p_z"], &[])?;
    let j = field(&ch, "p_y + p_x + y*p_z", p)?;
    let a = p.num("a");
    let mut e = base(system.clone(), sample_box, vec![0.0, 1.0, 0.0, a + 1.0, 1.0, -1.0]);
    e.monitors.push(Monitor::new("J0", j.clone()));
    e.monitors.push(Monitor::new("phi", phi.clone()));
    e.casimirs.push(CasimirClaim {
        label: "phi".into(),
        field: phi,
        side: Side::Left,
    });
    e.action = Some(ActionSpec::new(vec![gen], Some(group_y))?);
    e.momentum = Some(MomentumMapSpec::new(vec![j], vec![Some(field(&ch, "1", p)?)])?);
    e.reduction = Some(first_reduction(&ch, system, p)?);
    e.constraint = Some(spec);
    e.reducibility = Some(particle_reducibility(a));
    e.oracles.extend([pi, bt, ode]);
    Ok(e)
}

/// Translations in x and z, reduced by `(y, p_x, p_y, p_z)`.
fn first_reduction(ch: &Arc<CoordinateChart>, source: LeibnizSystem, p: &Params) -> Result<CatalogReduction> {
    let gens = vec![
        map(ch, &["1", "0", "0", "0", "0", "0"], p)?,
        map(ch, &["0", "0", "1", "0", "0", "0"], p)?,
    ];
    let group = GroupAction::parse(ch, &["b1", "b2"], &["x + b1", "y", "z + b2", "p_x", "p_y", "p_z"], &[])?;
    let reduction = InvariantReduction::parse(
        ch,
        &["y", "p_x", "p_y", "p_z"],
        &["y", "p_x", "p_y", "p_z"],
        &["0", "y", "0", "p_x", "p_y", "p_z"],
        p.constants(),
    )?;
    Ok(CatalogReduction {
        source,
        reduction,
        action: ActionSpec::new(gens, Some(group))?,
        reduced_box: SampleBox::cube(4, -2.0, 2.0),
        group_box: SampleBox::cube(2, -2.0, 2.0),
    })
}

/// `S = D_a` reached by solving `φ = 0` for `p_x`; distributions `w` (the
/// complement) and `translations` (span of d/dx, d/dz).
fn particle_reducibility(a: f64) -> ReducibilitySetup {
    let unit = |i: usize| DVector::from_fn(6, |j, _| if i == j { 1.0 } else { 0.0 });
    let tangent: BasisFn = Arc::new(|m: &[f64]| {
        let dphi = DVector::from_vec(vec![0.0, m[5], 0.0, 1.0, 0.0, m[1]]);
        Ok(kernel_basis(&dphi))
    });
    let w: BasisFn = Arc::new(|m: &[f64]| Ok(vec![DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 0.0, m[1]])]));
    let translations: BasisFn = Arc::new(move |_: &[f64]| Ok(vec![unit(0), unit(2)]));
    ReducibilitySetup {
        submanifold: "constraint".into(),
        project: Arc::new(move |m: &[f64]| {
            let mut v = m.to_vec();
            v[3] = a - v[1] * v[5];
            v
        }),
        tangent,
        distributions: vec![("w".into(), w), ("translations".into(), translations)],
    }
}

/// The computed first reduction `(y, p_x, p_y, p_z)` of the constrained particle.
fn computed_reduced_1() -> Result<LeibnizSystem> {
    let parent = super::make_system("constrained-particle", &[])?;
    let red = parent.reduction.expect("constrained particle carries its reduction");
    let mut rng = rng_from_seed(BUILD_CHECK_SEED);
    let pts = red.reduced_box.sample(&mut rng, BUILD_CHECK_POINTS, |_| true)?;
    reduce_by_invariants(&red.source, &red.reduction, &pts)
}

fn constrained_reduced_1(p: &Params) -> Result<CatalogEntry> {
    let ch = chart(&["y", "p_x", "p_y", "p_z"])?;
    let printed = OracleMatrix::parse("B1", &ch, &rows_of(&PRINTED_B1), p.constants())?;
    let h = field(&ch, "(p_x^2 + p_y^2 + p_z^2)/2", p)?;
    let b = if p.flag("printed") {
        tensor(&ch, &rows_of(&PRINTED_B1), p, Symmetry::General)?
    } else {
        // re-home the computed tensor onto this chart
        let computed = computed_reduced_1()?;
        LeibnizTensorField::symbolic(&ch, computed.tensor().entries().expect("symbolic reduction"), Symmetry::General)?
    };
    let system = LeibnizSystem::new(b, h)?;
    let hbar = field(&ch, "p_y^2/2", p)?;
    let mut e = base(system.clone(), SampleBox::cube(4, -2.0, 2.0), vec![1.0, 1.0, 1.0, -1.0]);
    for (label, src, side) in [
        ("p_y", "p_y", Side::Left),
        ("p_x + y*p_z", "p_x + y*p_z", Side::Left),
        ("p_x", "p_x", Side::Right),
        ("p_z", "p_z", Side::Right),
    ] {
        e.casimirs.push(CasimirClaim {
            label: label.into(),
            field: field(&ch, src, p)?,
            side,
        });
    }
    e.equivalent_hamiltonian = Some(hbar.clone());
    let gens = vec![map(&ch, &["0", "1", "0", "0"], p)?, map(&ch, &["0", "0", "0", "1"], p)?];
    let group = GroupAction::parse(&ch, &["b1", "b2"], &["y", "p_x + b1", "p_y", "p_z + b2"], &[])?;
    let action = ActionSpec::new(gens, Some(group))?;
    let reduction = InvariantReduction::parse(&ch, &["y", "p_y"], &["y", "p_y"], &["y", "0", "p_y", "0"], p.constants())?;
    e.reduction = Some(CatalogReduction {
        source: system.with_hamiltonian(hbar)?,
        reduction,
        action,
        reduced_box: SampleBox::cube(2, -2.0, 2.0),
        group_box: SampleBox::cube(2, -2.0, 2.0),
    });
    e.oracles.push(printed);
    Ok(e)
}

fn constrained_reduced_2(p: &Params) -> Result<CatalogEntry> {
    let ch = chart(&["y", "p_y"])?;
    let printed = OracleMatrix::parse("B2", &ch, &rows_of(&PRINTED_B2), p.constants())?;
    let h = field(&ch, "p_y^2/2", p)?;
    let b = if p.flag("printed") {
        tensor(&ch, &rows_of(&PRINTED_B2), p, Symmetry::General)?
    } else {
        let parent = super::make_system("constrained-particle-reduced-1", &[])?;
        let red = parent.reduction.expect("first reduction carries the second");
        let mut rng = rng_from_seed(BUILD_CHECK_SEED);
        let pts = red.reduced_box.sample(&mut rng, BUILD_CHECK_POINTS, |_| true)?;
        let computed = reduce_by_invariants(&red.source, &red.reduction, &pts)?;
        LeibnizTensorField::symbolic(&ch, computed.tensor().entries().expect("symbolic reduction"), Symmetry::General)?
    };
    let system = LeibnizSystem::new(b, h)?;
    let mut e = base(system, SampleBox::cube(2, -2.0, 2.0), vec![1.0, 1.0]);
    e.oracles.push(printed);
    Ok(e)
}

//! The inequality engine: evaluates both sides of every supported lower
//! bound on a scenario and emits margin reports with explicit sidedness.
//!
//! The certified object is always the right-hand side: wherever a slot
//! cannot be computed exactly, the engine consumes the side that makes the
//! asserted bound weaker but true — Harnack distances from above, boundary
//! suprema from above, the kernel gap `k(R + gap) - k(R)` from below (inner
//! radius from above, nesting gap from below). A reported pass therefore
//! certifies a genuine inequality instance; a negative margin signals an
//! implementation or sidedness bug, and is never suppressed.
//!
//! Verdicts separate analytic from stochastic failures: fully deterministic
//! checks pass at margin `-1e-9`, checks fed by Monte Carlo estimates pass
//! at three half-widths and are labelled as such.

use crate::domain::{Domain, NestedPair, Point, GEOM_TOL};
use crate::error::Error;
use crate::extreal::ExtReal;
use crate::green::{
    best_harmonic_majorant, green_general, green_lower_bound_via_harnack, EstimatorParams,
};
use crate::harnack::{
    ball_center_distance, chain_upper_bounds, interval_distance, punctured_sup_distance,
    ChainConfig, HarnackValue,
};
use crate::hausdorff::{content_upper_bound, gauge_integral, Gauge};
use crate::kernel::kernel_diff;
use crate::numeric::derive_seed;
use crate::riesz::AtomicMeasure;
use crate::testbed::TestFunction;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Deterministic margin tolerance for closed-form checks.
pub const MARGIN_TOL: f64 = 1e-9;

/// Verdict of a single inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Margin within tolerance, all inputs deterministic and certified.
    Pass,
    /// Margin within three half-widths, stochastic estimates involved.
    PassWithMc,
    /// The inequality check failed beyond tolerance.
    Fail,
    /// A required input could not be certified on the needed side; the
    /// check refuses to guess.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::PassWithMc => "pass_with_mc",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// The inequality families the engine can check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Pointwise lower bound from the Harnack distance and the gauge
    /// integral of the restricted Riesz measure at the full diameter.
    PointwiseLowerBound,
    /// Refined lower bound with the punctured-domain Harnack term and a
    /// reduced integration radius.
    RefinedLowerBound,
    /// Exceptional-set bound: infimum off a small set plus a content bound
    /// on that set.
    ExceptionalSet,
    /// Comparison bound for functions harmonic on the inner domain.
    HarmonicComparison,
    /// Lower bound on the Green function of the outer domain along the
    /// inner boundary.
    GreenBoundaryInf,
    /// Upper bound on the restricted Riesz mass through the harmonic
    /// majorant at the base point.
    MassBound,
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CheckKind::PointwiseLowerBound => "pointwise_lower_bound",
            CheckKind::RefinedLowerBound => "refined_lower_bound",
            CheckKind::ExceptionalSet => "exceptional_set",
            CheckKind::HarmonicComparison => "harmonic_comparison",
            CheckKind::GreenBoundaryInf => "green_boundary_inf",
            CheckKind::MassBound => "mass_bound",
        };
        f.write_str(s)
    }
}

/// Deliberate corruptions for soundness fixtures: each understates a
/// quantity whose understatement must flip a verdict to fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Report boundary suprema as zero (a wrong-sided under-estimate).
    UnderstateBoundarySup,
    /// Report every Harnack distance as its floor value 1.
    UnderstateHarnack,
}

/// One inequality check outcome.
#[derive(Clone, Debug, Serialize)]
pub struct MarginReport {
    pub scenario: String,
    pub id: String,
    pub check: CheckKind,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
    pub margin: ExtReal,
    pub mc_half_width: f64,
    /// Which side each uncertain input was consumed on.
    pub sidedness: Vec<String>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl MarginReport {
    pub fn csv_header() -> &'static str {
        "scenario,id,check,lhs,rhs,margin,mc_half_width,verdict,sidedness,notes"
    }

    pub fn csv_row(&self) -> String {
        let quote = |s: &str| format!("\"{}\"", s.replace('"', "'"));
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            quote(&self.scenario),
            quote(&self.id),
            self.check,
            self.lhs,
            self.rhs,
            self.margin,
            self.mc_half_width,
            self.verdict,
            quote(&self.sidedness.join("; ")),
            quote(&self.notes.join("; ")),
        )
    }
}

/// A fully resolved scenario ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub pair: NestedPair,
    pub function: TestFunction,
    /// Evaluation set S, strictly inside the inner domain.
    pub eval_points: Vec<Point>,
    /// Gauge for the exceptional-set check.
    pub gauge: Option<Gauge>,
    /// Radius cap for the exceptional-set check, within (0, diameter].
    pub r: Option<f64>,
    /// Reduced radii for the refined check, as fractions of the diameter.
    pub r_x_fractions: Vec<f64>,
    pub params: EstimatorParams,
    /// Chain-graph mesh for Harnack upper bounds on general domains.
    pub mesh: f64,
    pub checks: Vec<CheckKind>,
    pub corruption: Option<Corruption>,
    /// Use the outer boundary supremum in the first term of the refined
    /// bound (sanctioned by the maximum principle).
    pub substitute_outer_sup: bool,
}

/// Aggregate of a suite run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteSummary {
    pub reports: Vec<MarginReport>,
    pub scenarios_run: usize,
    pub pass: usize,
    pub pass_with_mc: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl SuiteSummary {
    pub fn absorb(&mut self, reports: Vec<MarginReport>) {
        for r in &reports {
            match r.verdict {
                Verdict::Pass => self.pass += 1,
                Verdict::PassWithMc => self.pass_with_mc += 1,
                Verdict::Fail => self.fail += 1,
                Verdict::Inconclusive => self.inconclusive += 1,
            }
        }
        self.reports.extend(reports);
        self.scenarios_run += 1;
    }

    pub fn has_failures(&self) -> bool {
        self.fail > 0
    }

    /// Smallest finite margin across all reports.
    pub fn worst_margin(&self) -> Option<f64> {
        self.reports
            .iter()
            .filter_map(|r| r.margin.finite())
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

/// Exceptional-set outcome: member indices into the evaluation set plus the
/// two reports.
#[derive(Clone, Debug)]
pub struct ExceptionalOutcome {
    pub members: Vec<usize>,
    pub report_inf: MarginReport,
    pub report_content: MarginReport,
}

/// Runs every requested check of one scenario.
pub fn run_scenario(sc: &Scenario) -> Result<Vec<MarginReport>> {
    let ctx = Context::build(sc)?;
    let mut out = Vec::new();
    for check in &sc.checks {
        match check {
            CheckKind::PointwiseLowerBound => ctx.pointwise(&mut out)?,
            CheckKind::RefinedLowerBound => ctx.refined(&mut out)?,
            CheckKind::ExceptionalSet => {
                let e = ctx.exceptional(64)?;
                out.push(e.report_inf);
                out.push(e.report_content);
            }
            CheckKind::HarmonicComparison => ctx.harmonic_comparison(&mut out)?,
            CheckKind::GreenBoundaryInf => ctx.green_boundary_inf(&mut out)?,
            CheckKind::MassBound => ctx.mass_bound(&mut out)?,
        }
    }
    Ok(out)
}

/// Runs the exceptional-set construction alone, with a configurable guard
/// grid density (the membership test itself is decided at the atom jump
/// radii; the guard grid is defense in depth).
pub fn run_exceptional(sc: &Scenario, guard_grid: usize) -> Result<ExceptionalOutcome> {
    Context::build(sc)?.exceptional(guard_grid)
}

/// Certified upper Harnack distances from the base to each evaluation
/// point, exactly as the checks consume them (exact on intervals and
/// centered balls, chain bounds otherwise).
pub fn harnack_distances(sc: &Scenario) -> Result<Vec<HarnackValue>> {
    Context::distances(sc, &sc.pair.inner)
}

/// Runs a whole corpus; deterministic given the scenarios' own seeds.
pub fn run_suite(scenarios: &[Scenario]) -> Result<SuiteSummary> {
    let mut summary = SuiteSummary::default();
    for sc in scenarios {
        summary.absorb(run_scenario(sc)?);
    }
    Ok(summary)
}

/// Everything the individual checks share, assembled once per scenario.
struct Context<'a> {
    sc: &'a Scenario,
    d: u32,
    /// Upper side of the inner diameter (the bound consumes it from above).
    diam_up: f64,
    /// Lower side of the kernel gap `k(R + gap) - k(R)`.
    denom_lo: f64,
    /// Upper-corrected boundary suprema (None when uncertifiable).
    sup_inner_up: Option<f64>,
    sup_outer_up: Option<f64>,
    sup_inner_exact: bool,
    sup_outer_exact: bool,
    /// Certified upper Harnack distances from the base to each eval point.
    dist: Vec<HarnackValue>,
    /// Certified upper punctured-domain Harnack supremum (lazy).
    punct: Option<HarnackValue>,
    /// Riesz measure restricted to the closed inner domain.
    restricted: AtomicMeasure,
}

impl<'a> Context<'a> {
    fn build(sc: &'a Scenario) -> Result<Self> {
        let d = sc.pair.dim() as u32;
        let inner = &sc.pair.inner;
        let scale = inner.diameter().upper;
        if sc.eval_points.is_empty() {
            return Err(Error::schema("evaluation", "evaluation set is empty"));
        }
        for (i, p) in sc.eval_points.iter().enumerate() {
            if inner.signed_distance(p) >= -GEOM_TOL * scale {
                return Err(Error::schema(
                    "evaluation",
                    format!("evaluation point {i} is not strictly inside the inner domain"),
                ));
            }
        }
        let diam_up = inner.diameter().upper;
        let r_up = sc.pair.base_inradius().upper;
        let gap_lo = sc.pair.gap().lower;
        let denom_lo = kernel_diff(d, r_up, r_up + gap_lo)
            .finite()
            .ok_or_else(|| Error::degenerate("kernel gap is not finite"))?;
        if denom_lo <= 0.0 {
            return Err(Error::degenerate("kernel gap lower bound is not positive"));
        }

        let sup_in = sc.function.sup_on_boundary(inner, sc.params.samples)?;
        let sup_out = sc
            .function
            .sup_on_boundary(&sc.pair.outer, sc.params.samples)?;
        let (mut sup_inner_up, mut sup_outer_up) = (sup_in.upper, sup_out.upper);
        if sc.corruption == Some(Corruption::UnderstateBoundarySup) {
            sup_inner_up = Some(0.0);
            sup_outer_up = Some(0.0);
        }

        let needs_punct = sc.checks.iter().any(|c| {
            matches!(
                c,
                CheckKind::RefinedLowerBound
                    | CheckKind::ExceptionalSet
                    | CheckKind::GreenBoundaryInf
                    | CheckKind::MassBound
            )
        });
        let punct = if needs_punct {
            Some(if sc.corruption == Some(Corruption::UnderstateHarnack) {
                HarnackValue::upper(1.0)
            } else {
                punctured_sup_distance(&sc.pair, sc.mesh, ChainConfig::default())?
            })
        } else {
            None
        };

        let dist = Self::distances(sc, inner)?;
        let restricted = sc
            .function
            .riesz_measure()
            .restrict_closure(inner, GEOM_TOL * scale);
        Ok(Context {
            sc,
            d,
            diam_up,
            denom_lo,
            sup_inner_up,
            sup_outer_up,
            sup_inner_exact: sup_in.exact,
            sup_outer_exact: sup_out.exact,
            dist,
            punct,
            restricted,
        })
    }

    /// Harnack distance from the base point to every evaluation point:
    /// exact for intervals and centered balls, chain upper bounds
    /// otherwise, floor-corrupted when the scenario says so.
    fn distances(sc: &Scenario, inner: &Domain) -> Result<Vec<HarnackValue>> {
        if sc.corruption == Some(Corruption::UnderstateHarnack) {
            return Ok(vec![HarnackValue::upper(1.0); sc.eval_points.len()]);
        }
        let o = &sc.pair.base;
        match inner {
            Domain::Interval(iv) => sc
                .eval_points
                .iter()
                .map(|x| interval_distance(iv, o.get(0), x.get(0)))
                .collect(),
            Domain::Ball(b) if b.dim() >= 2 && o.dist(&b.center) <= GEOM_TOL * b.radius => sc
                .eval_points
                .iter()
                .map(|x| ball_center_distance(sc.pair.dim() as u32, b.radius, x.dist(o)))
                .collect(),
            _ => chain_upper_bounds(inner, o, &sc.eval_points, sc.mesh, ChainConfig::default()),
        }
    }

    fn dist_exact(&self) -> bool {
        self.dist
            .iter()
            .all(|h| h.kind == crate::harnack::BoundKind::Exact)
    }

    /// Builds a report for an inequality `lhs >= rhs`, resolving infinite
    /// sides before forming the margin.
    #[allow(clippy::too_many_arguments)]
    fn lower_bound_report(
        &self,
        id: String,
        check: CheckKind,
        lhs: ExtReal,
        rhs: ExtReal,
        hw: f64,
        sidedness: Vec<String>,
        mut notes: Vec<String>,
    ) -> MarginReport {
        let (margin, verdict) = match (lhs, rhs) {
            (_, ExtReal::NegInf) => {
                notes.push("vacuous: the certified bound is minus infinity".into());
                (ExtReal::PosInf, Verdict::Pass)
            }
            (ExtReal::PosInf, _) => (ExtReal::PosInf, Verdict::Pass),
            (ExtReal::NegInf, _) => (ExtReal::NegInf, Verdict::Fail),
            (_, ExtReal::PosInf) => (ExtReal::NegInf, Verdict::Fail),
            (ExtReal::Finite(l), ExtReal::Finite(r)) => {
                let m = l - r;
                let verdict = if m >= -(MARGIN_TOL + 3.0 * hw) {
                    if hw > 0.0 {
                        Verdict::PassWithMc
                    } else {
                        Verdict::Pass
                    }
                } else {
                    Verdict::Fail
                };
                (ExtReal::Finite(m), verdict)
            }
        };
        if self.sc.corruption.is_some() {
            notes.push("scenario carries a deliberate corruption".into());
        }
        MarginReport {
            scenario: self.sc.name.clone(),
            id,
            check,
            lhs,
            rhs,
            margin,
            mc_half_width: hw,
            sidedness,
            verdict,
            notes,
        }
    }

    fn inconclusive(&self, id: String, check: CheckKind, why: &str) -> MarginReport {
        MarginReport {
            scenario: self.sc.name.clone(),
            id,
            check,
            lhs: ExtReal::Finite(0.0),
            rhs: ExtReal::Finite(0.0),
            margin: ExtReal::Finite(0.0),
            mc_half_width: 0.0,
            sidedness: Vec::new(),
            verdict: Verdict::Inconclusive,
            notes: vec![why.to_string()],
        }
    }

    fn sup_sidedness(&self, which: &str, exact: bool) -> String {
        if self.sc.corruption == Some(Corruption::UnderstateBoundarySup) {
            format!("{which}: CORRUPTED to zero (wrong side)")
        } else if exact {
            format!("{which}: exact")
        } else {
            format!("{which}: upper (sampled max + Lipschitz correction)")
        }
    }

    fn dist_sidedness(&self) -> String {
        if self.sc.corruption == Some(Corruption::UnderstateHarnack) {
            "harnack distance: CORRUPTED to floor 1 (wrong side)".into()
        } else if self.dist_exact() {
            "harnack distance: exact".into()
        } else {
            "harnack distance: upper (chain bound)".into()
        }
    }

    fn punct_sidedness(&self) -> String {
        if self.sc.corruption == Some(Corruption::UnderstateHarnack) {
            "punctured harnack sup: CORRUPTED to floor 1 (wrong side)".into()
        } else {
            match self.punct.as_ref().map(|p| p.kind) {
                Some(crate::harnack::BoundKind::Exact) => "punctured harnack sup: exact".into(),
                _ => "punctured harnack sup: upper (chain bound)".into(),
            }
        }
    }

    /// The basic bound: for each evaluation point,
    /// `u(x) >= -(dist - 1) * sup_inner - N_x(diameter)`.
    fn pointwise(&self, out: &mut Vec<MarginReport>) -> Result<()> {
        let sup = match self.sup_inner_up {
            Some(s) => s,
            None => {
                out.push(self.inconclusive(
                    "pointwise_lower_bound".into(),
                    CheckKind::PointwiseLowerBound,
                    "no certified upper bound for the inner boundary supremum",
                ));
                return Ok(());
            }
        };
        let sidedness = vec![
            self.dist_sidedness(),
            self.sup_sidedness("inner boundary sup", self.sup_inner_exact),
            "counting integral: exact closed form at the diameter's upper side".into(),
        ];
        for (i, x) in self.sc.eval_points.iter().enumerate() {
            let lhs = self.sc.function.evaluate(x);
            let n = self.restricted.integrated_counting(self.d, x, self.diam_up);
            let first = ExtReal::Finite(-(self.dist[i].value - 1.0) * sup);
            let rhs = first - n;
            let mut notes = vec![format!("x = {:?}", x.coords())];
            if n == ExtReal::PosInf {
                notes.push("evaluation point sits on an atom; bound is vacuous".into());
            }
            out.push(self.lower_bound_report(
                format!("pointwise_lower_bound[{i}]"),
                CheckKind::PointwiseLowerBound,
                lhs,
                rhs,
                0.0,
                sidedness.clone(),
                notes,
            ));
        }
        Ok(())
    }

    /// The refined bound at each reduced radius fraction: adds the
    /// punctured-Harnack middle term and integrates the counting function
    /// only up to `r_x`.
    fn refined(&self, out: &mut Vec<MarginReport>) -> Result<()> {
        let punct = self
            .punct
            .as_ref()
            .expect("punct computed for refined check");
        let sup_outer = match self.sup_outer_up {
            Some(s) => s,
            None => {
                out.push(self.inconclusive(
                    "refined_lower_bound".into(),
                    CheckKind::RefinedLowerBound,
                    "no certified upper bound for the outer boundary supremum",
                ));
                return Ok(());
            }
        };
        let first_sup = if self.sc.substitute_outer_sup {
            Some(sup_outer)
        } else {
            self.sup_inner_up
        };
        let first_sup = match first_sup {
            Some(s) => s,
            None => {
                out.push(self.inconclusive(
                    "refined_lower_bound".into(),
                    CheckKind::RefinedLowerBound,
                    "no certified upper bound for the inner boundary supremum",
                ));
                return Ok(());
            }
        };
        let sidedness = vec![
            self.dist_sidedness(),
            self.sup_sidedness(
                if self.sc.substitute_outer_sup {
                    "outer boundary sup (substituted)"
                } else {
                    "inner boundary sup"
                },
                if self.sc.substitute_outer_sup {
                    self.sup_outer_exact
                } else {
                    self.sup_inner_exact
                },
            ),
            self.punct_sidedness(),
            self.sup_sidedness("outer boundary sup", self.sup_outer_exact),
            "kernel gap: lower (inradius upper, nesting gap lower)".into(),
            "diameter: upper".into(),
        ];
        for (j, frac) in self.sc.r_x_fractions.iter().enumerate() {
            if !(*frac > 0.0 && *frac <= 1.0) {
                return Err(Error::schema("r_x", "radius fractions must lie in (0, 1]"));
            }
            let r_x = frac * self.diam_up;
            let numer = kernel_diff(self.d, r_x, self.diam_up)
                .finite()
                .expect("positive radii give finite kernel differences");
            let middle = numer / self.denom_lo * punct.value * sup_outer;
            for (i, x) in self.sc.eval_points.iter().enumerate() {
                let lhs = self.sc.function.evaluate(x);
                let n = self.restricted.integrated_counting(self.d, x, r_x);
                let rhs = ExtReal::Finite(-(self.dist[i].value - 1.0) * first_sup - middle) - n;
                let mut notes = vec![format!("x = {:?}, r_x = {r_x}", x.coords())];
                if n == ExtReal::PosInf {
                    notes.push("evaluation point sits on an atom; bound is vacuous".into());
                }
                out.push(self.lower_bound_report(
                    format!("refined_lower_bound[p{i},rx{j}]"),
                    CheckKind::RefinedLowerBound,
                    lhs,
                    rhs,
                    0.0,
                    sidedness.clone(),
                    notes,
                ));
            }
        }
        Ok(())
    }

    /// Exceptional-set construction. Membership uses the certified upper
    /// bound `M` of the outer boundary supremum consistently on both sides,
    /// which keeps both reports instances of the true bounds: enlarging the
    /// threshold shrinks `E` but also weakens the infimum bound in step.
    fn exceptional(&self, guard_grid: usize) -> Result<ExceptionalOutcome> {
        let gauge = self
            .sc
            .gauge
            .as_ref()
            .ok_or_else(|| Error::schema("gauge", "exceptional-set check requires a gauge"))?;
        let r = self
            .sc
            .r
            .ok_or_else(|| Error::schema("r", "exceptional-set check requires a radius cap"))?;
        let diam_lo = self.sc.pair.inner.diameter().lower;
        if !(r > 0.0 && r <= diam_lo) {
            return Err(Error::schema(
                "r",
                "radius cap must lie in (0, diameter] (checked against the lower diameter side)",
            ));
        }
        let punct = self
            .punct
            .as_ref()
            .expect("punct computed for exceptional check");
        let m = match self.sup_outer_up {
            Some(s) if s > 0.0 => s,
            Some(_) => {
                return Err(Error::degenerate(
                    "outer boundary supremum upper bound is not positive; the membership \
                     threshold would be degenerate",
                ))
            }
            None => {
                return Err(Error::degenerate(
                    "no certified upper bound for the outer boundary supremum",
                ))
            }
        };
        let n0h = match gauge_integral(self.d, gauge, r) {
            ExtReal::Finite(v) => v,
            _ => {
                return Err(Error::schema(
                    "gauge",
                    "gauge integral diverges in this dimension",
                ))
            }
        };

        // Membership: exists t in (0, r] with counting(x, t) >= h(t) * M.
        // The counting function is a right-continuous step function with
        // jumps exactly at atom distances, and the gauge is increasing, so
        // testing the jump radii decides membership; the guard grid is
        // redundant by that argument but cheap.
        let mut members = Vec::new();
        for (i, x) in self.sc.eval_points.iter().enumerate() {
            let mut member = self.restricted.jump_radii(x).into_iter().any(|t| {
                if t == 0.0 {
                    // An atom at x itself: counting stays >= its mass
                    // as t -> 0 while the threshold vanishes.
                    true
                } else {
                    t <= r && self.restricted.radial_counting(x, t) >= gauge.eval(t) * m
                }
            });
            if !member {
                for k in 1..=guard_grid {
                    let t = r * k as f64 / guard_grid as f64;
                    if self.restricted.radial_counting(x, t) >= gauge.eval(t) * m {
                        member = true;
                        break;
                    }
                }
            }
            if member {
                members.push(i);
            }
        }

        // Report 1: infimum over the survivors.
        let mut inf = ExtReal::PosInf;
        let mut member_mask = vec![false; self.sc.eval_points.len()];
        for &i in &members {
            member_mask[i] = true;
        }
        for (i, x) in self.sc.eval_points.iter().enumerate() {
            if !member_mask[i] {
                inf = inf.min(self.sc.function.evaluate(x));
            }
        }
        let sup_dist = self
            .dist
            .iter()
            .map(|h| h.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let numer = kernel_diff(self.d, r, self.diam_up)
            .finite()
            .expect("positive radii give finite kernel differences");
        let rhs_inf = -(sup_dist - 1.0 + numer / self.denom_lo * punct.value + n0h) * m;
        let mut notes_inf = vec![format!(
            "excluded {} of {} evaluation points",
            members.len(),
            self.sc.eval_points.len()
        )];
        if inf == ExtReal::PosInf {
            notes_inf.push("every evaluation point is exceptional; infimum bound vacuous".into());
        }
        let sidedness_inf = vec![
            self.dist_sidedness(),
            self.punct_sidedness(),
            self.sup_sidedness(
                "outer boundary sup (threshold and bound)",
                self.sup_outer_exact,
            ),
            "gauge integral: exact closed form".into(),
            "kernel gap: lower (inradius upper, nesting gap lower)".into(),
        ];
        let report_inf = self.lower_bound_report(
            "exceptional_set[inf]".into(),
            CheckKind::ExceptionalSet,
            inf,
            ExtReal::Finite(rhs_inf),
            0.0,
            sidedness_inf,
            notes_inf,
        );

        // Report 2: greedy-cover content of E against the covering bound.
        // Our content value is itself an upper bound, so this comparison is
        // sufficient for the true bound when it passes and inconclusive
        // (never a refutation) otherwise.
        let e_points: Vec<Point> = members.iter().map(|&i| self.sc.eval_points[i]).collect();
        let content = content_upper_bound(gauge, &e_points, r)?;
        let rhs_content = 5.0f64.powi(self.d as i32) / self.denom_lo * punct.value;
        let sidedness_content = vec![
            self.punct_sidedness(),
            "kernel gap: lower (inradius upper, nesting gap lower)".into(),
            "content: greedy-cover upper bound".into(),
        ];
        let mut report_content = self.lower_bound_report(
            "exceptional_set[content]".into(),
            CheckKind::ExceptionalSet,
            ExtReal::Finite(rhs_content),
            ExtReal::Finite(content.value),
            0.0,
            sidedness_content,
            vec![format!(
                "cover: {} balls at scale {}",
                content.net_size, content.scale
            )],
        );
        if report_content.verdict == Verdict::Fail {
            report_content.verdict = Verdict::Inconclusive;
            report_content.notes.push(
                "cover upper bound exceeds the certified bound; both sides are upper \
                 estimates, so this is not a refutation"
                    .into(),
            );
        }
        Ok(ExceptionalOutcome {
            members,
            report_inf,
            report_content,
        })
    }

    /// Comparison bound for functions harmonic on the inner closure:
    /// `min_S u >= -(max_S dist - 1) * sup_inner`.
    fn harmonic_comparison(&self, out: &mut Vec<MarginReport>) -> Result<()> {
        if !self.restricted.is_empty() {
            return Err(Error::degenerate(
                "comparison check requires a function harmonic on the inner closure",
            ));
        }
        let sup = match self.sup_inner_up {
            Some(s) => s,
            None => {
                out.push(self.inconclusive(
                    "harmonic_comparison".into(),
                    CheckKind::HarmonicComparison,
                    "no certified upper bound for the inner boundary supremum",
                ));
                return Ok(());
            }
        };
        let mut inf = ExtReal::PosInf;
        for x in &self.sc.eval_points {
            inf = inf.min(self.sc.function.evaluate(x));
        }
        let sup_dist = self
            .dist
            .iter()
            .map(|h| h.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let rhs = ExtReal::Finite(-(sup_dist - 1.0) * sup);
        let sidedness = vec![
            self.dist_sidedness(),
            self.sup_sidedness("inner boundary sup", self.sup_inner_exact),
        ];
        out.push(self.lower_bound_report(
            "harmonic_comparison".into(),
            CheckKind::HarmonicComparison,
            inf,
            rhs,
            0.0,
            sidedness,
            Vec::new(),
        ));
        Ok(())
    }

    /// Green lower bound along the inner boundary: the sampled infimum of
    /// the outer Green function (an upper estimate of the true infimum)
    /// must dominate the kernel-gap-over-Harnack bound.
    fn green_boundary_inf(&self, out: &mut Vec<MarginReport>) -> Result<()> {
        let punct = self.punct.as_ref().expect("punct computed for green check");
        let rhs = green_lower_bound_via_harnack(&self.sc.pair, punct)?;
        let boundary = self.sc.pair.inner.boundary_sample(64);
        let mut inf = ExtReal::PosInf;
        let mut hw = 0.0f64;
        let mut kind_note = "closed form";
        for (i, x) in boundary.points.iter().enumerate() {
            let sub = EstimatorParams {
                seed: derive_seed(self.sc.params.seed, "green-inf", i as u64),
                ..self.sc.params
            };
            let g = green_general(&self.sc.pair.outer, &self.sc.pair.base, x, &sub)?;
            inf = inf.min(g.value);
            hw = hw.max(g.half_width);
            kind_note = match g.kind {
                crate::green::EstimateKind::ClosedForm => kind_note,
                crate::green::EstimateKind::Quadrature => "quadrature",
                crate::green::EstimateKind::MonteCarlo => "walk-on-spheres",
            };
        }
        let sidedness = vec![
            format!("green values: {kind_note}; sampled infimum is an upper estimate"),
            self.punct_sidedness(),
            "kernel gap: lower (inradius upper, nesting gap lower)".into(),
        ];
        out.push(self.lower_bound_report(
            "green_boundary_inf".into(),
            CheckKind::GreenBoundaryInf,
            inf,
            ExtReal::Finite(rhs),
            hw,
            sidedness,
            vec![format!(
                "sampled {} inner boundary points",
                boundary.points.len()
            )],
        ));
        Ok(())
    }

    /// Riesz-mass bound: restricted mass (exact) against the punctured
    /// Harnack sup over the kernel gap times the harmonic majorant at the
    /// base point. The inequality runs the other way, so lhs and rhs swap
    /// roles in the report.
    fn mass_bound(&self, out: &mut Vec<MarginReport>) -> Result<()> {
        let punct = self.punct.as_ref().expect("punct computed for mass check");
        let u = |p: &Point| self.sc.function.evaluate(p);
        let majorant =
            best_harmonic_majorant(&u, &self.sc.pair.outer, &self.sc.pair.base, &self.sc.params)?;
        let mass = self.restricted.total_mass();
        let factor = punct.value / self.denom_lo;
        let rhs = match majorant.value {
            ExtReal::Finite(h) => ExtReal::Finite(factor * h),
            inf => inf,
        };
        let hw = factor * majorant.half_width;
        let kind_note = match majorant.kind {
            crate::green::EstimateKind::ClosedForm => "closed form",
            crate::green::EstimateKind::Quadrature => "quadrature",
            crate::green::EstimateKind::MonteCarlo => "walk-on-spheres",
        };
        let sidedness = vec![
            self.punct_sidedness(),
            "kernel gap: lower (inradius upper, nesting gap lower)".into(),
            format!("harmonic majorant at base: {kind_note} (half-width reported)"),
            "restricted mass: exact".into(),
        ];
        out.push(self.lower_bound_report(
            "mass_bound".into(),
            CheckKind::MassBound,
            rhs,
            ExtReal::Finite(mass),
            hw,
            sidedness,
            vec![format!(
                "restricted atoms: {}",
                self.restricted.atoms().len()
            )],
        ));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbed::{TestFunctionKind, WeightedPoint};

    fn concentric_disk_scenario(checks: Vec<CheckKind>) -> Scenario {
        let pair = NestedPair::new(
            Domain::ball(Point::new(&[0.0, 0.0]), 1.0).unwrap(),
            Domain::ball(Point::new(&[0.0, 0.0]), 2.0).unwrap(),
            Point::new(&[0.0, 0.0]),
        )
        .unwrap();
        let function = TestFunction::new(
            TestFunctionKind::LogAbsProduct {
                zeros: vec![WeightedPoint {
                    location: Point::new(&[0.5, 0.0]),
                    mass: 1.0,
                }],
            },
            Point::new(&[0.0, 0.0]),
        )
        .unwrap();
        let mut eval_points = Vec::new();
        for i in 0..9 {
            for j in 0..9 {
                let p = Point::new(&[-0.8 + 0.2 * i as f64, -0.8 + 0.2 * j as f64]);
                if p.norm() < 0.85 {
                    eval_points.push(p);
                }
            }
        }
        Scenario {
            name: "concentric-disks".into(),
            pair,
            function,
            eval_points,
            gauge: Some(Gauge::power(2.0, 4.0).unwrap()),
            r: Some(0.5),
            r_x_fractions: vec![1.0, 0.5, 0.125],
            params: EstimatorParams {
                samples: 2048,
                seed: 3,
                ..Default::default()
            },
            mesh: 0.05,
            checks,
            corruption: None,
            substitute_outer_sup: false,
        }
    }

    #[test]
    fn pointwise_margin_matches_hand_computation() {
        let mut sc = concentric_disk_scenario(vec![CheckKind::PointwiseLowerBound]);
        sc.eval_points = vec![Point::new(&[-0.5, 0.0])];
        let reports = run_scenario(&sc).unwrap();
        assert_eq!(reports.len(), 1);
        let rep = &reports[0];
        assert_eq!(rep.verdict, Verdict::Pass);
        // lhs = ln|(-0.5) - 0.5| - ln 0.5 = ln 2; dist at radius ratio 0.5
        // in the plane is (1 + 0.5)/(1 - 0.5) = 3; sup on the unit circle
        // is ln 1.5 - ln 0.5 = ln 3 (exact single-zero path); the counting
        // integral is k(2) - k(1) = ln 2 at unit atom distance.
        let lhs = rep.lhs.finite().unwrap();
        assert!((lhs - 2.0f64.ln()).abs() < 1e-12);
        let rhs = rep.rhs.finite().unwrap();
        assert!((rhs - (-2.0 * 3.0f64.ln() - 2.0f64.ln())).abs() < 1e-12);
        let margin = rep.margin.finite().unwrap();
        assert!((margin - 36.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn atom_point_is_vacuously_bounded() {
        let mut sc = concentric_disk_scenario(vec![CheckKind::PointwiseLowerBound]);
        sc.eval_points = vec![Point::new(&[0.5, 0.0])];
        let reports = run_scenario(&sc).unwrap();
        assert_eq!(reports[0].verdict, Verdict::Pass);
        assert_eq!(reports[0].lhs, ExtReal::NegInf);
        assert_eq!(reports[0].rhs, ExtReal::NegInf);
        assert!(reports[0].notes.iter().any(|n| n.contains("vacuous")));
    }

    #[test]
    fn full_radius_refinement_reproduces_the_basic_bound() {
        let sc = concentric_disk_scenario(vec![
            CheckKind::PointwiseLowerBound,
            CheckKind::RefinedLowerBound,
        ]);
        let reports = run_scenario(&sc).unwrap();
        let n = sc.eval_points.len();
        let pointwise: Vec<_> = reports
            .iter()
            .filter(|r| r.check == CheckKind::PointwiseLowerBound)
            .collect();
        let refined_full: Vec<_> = reports
            .iter()
            .filter(|r| r.check == CheckKind::RefinedLowerBound && r.id.contains("rx0"))
            .collect();
        assert_eq!(pointwise.len(), n);
        assert_eq!(refined_full.len(), n);
        for (p, q) in pointwise.iter().zip(&refined_full) {
            assert_eq!(
                p.rhs, q.rhs,
                "full-radius refinement must reproduce the basic rhs"
            );
        }
        assert!(reports.iter().all(|r| r.verdict == Verdict::Pass));
    }

    #[test]
    fn refined_bound_passes_at_all_fractions() {
        let sc = concentric_disk_scenario(vec![CheckKind::RefinedLowerBound]);
        let reports = run_scenario(&sc).unwrap();
        assert_eq!(reports.len(), 3 * sc.eval_points.len());
        assert!(reports.iter().all(|r| r.verdict == Verdict::Pass));
    }

    /// A scenario whose bound is carried by the boundary-sup term: the zero
    /// sits outside the closed inner disk, so the counting term vanishes
    /// and u dips below zero near the boundary on the far side.
    fn sup_carried_scenario() -> Scenario {
        let mut sc = concentric_disk_scenario(vec![CheckKind::PointwiseLowerBound]);
        sc.function = TestFunction::new(
            TestFunctionKind::LogAbsProduct {
                zeros: vec![WeightedPoint {
                    location: Point::new(&[1.2, 0.0]),
                    mass: 1.0,
                }],
            },
            Point::new(&[0.0, 0.0]),
        )
        .unwrap();
        sc.eval_points = vec![Point::new(&[0.9, 0.0])];
        sc
    }

    #[test]
    fn corrupted_boundary_sup_flips_a_verdict() {
        let honest = run_suite(std::slice::from_ref(&sup_carried_scenario())).unwrap();
        assert!(!honest.has_failures(), "the honest scenario must pass");
        let mut sc = sup_carried_scenario();
        sc.corruption = Some(Corruption::UnderstateBoundarySup);
        let summary = run_suite(std::slice::from_ref(&sc)).unwrap();
        assert!(
            summary.has_failures(),
            "understated sup must surface as a failure"
        );
        // lhs = ln 0.3 - ln 1.2 < 0, corrupted rhs = 0.
        let rep = &summary.reports[0];
        assert!((rep.lhs.finite().unwrap() - 0.25f64.ln()).abs() < 1e-12);
        assert_eq!(rep.rhs.finite().unwrap(), 0.0);
    }

    #[test]
    fn corrupted_harnack_floor_flips_a_verdict() {
        let mut sc = sup_carried_scenario();
        sc.corruption = Some(Corruption::UnderstateHarnack);
        let summary = run_suite(std::slice::from_ref(&sc)).unwrap();
        assert!(
            summary.has_failures(),
            "floored Harnack distances must surface as a failure"
        );
    }

    #[test]
    fn exceptional_set_localizes_and_survives_finer_grids() {
        let sc = concentric_disk_scenario(vec![CheckKind::ExceptionalSet]);
        let coarse = run_exceptional(&sc, 64).unwrap();
        let fine = run_exceptional(&sc, 640).unwrap();
        assert_eq!(
            coarse.members, fine.members,
            "membership must not depend on the guard grid"
        );
        assert_eq!(coarse.report_inf.verdict, Verdict::Pass);
        assert_eq!(coarse.report_content.verdict, Verdict::Pass);
        // The atom at (0.5, 0) must be excluded: points right next to it
        // violate the threshold at tiny radii.
        let atom = Point::new(&[0.5, 0.0]);
        let nearest = sc
            .eval_points
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.dist(&atom).partial_cmp(&b.dist(&atom)).unwrap())
            .unwrap()
            .0;
        assert!(
            coarse.members.contains(&nearest),
            "the evaluation point on the atom must be exceptional"
        );
    }

    #[test]
    fn green_boundary_inf_is_tight_on_concentric_disks() {
        let sc = concentric_disk_scenario(vec![CheckKind::GreenBoundaryInf]);
        let reports = run_scenario(&sc).unwrap();
        let rep = &reports[0];
        // Concentric closed form: both sides equal k(2) - k(1) = ln 2, so
        // the margin is exactly zero and fully deterministic.
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!((rep.lhs.finite().unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert!((rep.rhs.finite().unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert!(rep.margin.finite().unwrap().abs() < 1e-12);
    }

    #[test]
    fn mass_bound_is_exact_on_concentric_disks() {
        let sc = concentric_disk_scenario(vec![CheckKind::MassBound]);
        let reports = run_scenario(&sc).unwrap();
        let rep = &reports[0];
        // Restricted mass 1; majorant at 0 of ln|z - 0.5| - ln 0.5 over the
        // radius-2 disk is ln 2 - ln 0.5 = ln 4; kernel gap ln 2; punctured
        // sup 1 (concentric fast path). Bound = ln 4 / ln 2 = 2.
        assert!(matches!(rep.verdict, Verdict::Pass | Verdict::PassWithMc));
        assert!((rep.rhs.finite().unwrap() - 1.0).abs() < 1e-12);
        assert!((rep.lhs.finite().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn harmonic_comparison_accepts_outside_singularities_only() {
        // ln|z - 3| is harmonic on the unit disk; the comparison check runs.
        let mut sc = concentric_disk_scenario(vec![CheckKind::HarmonicComparison]);
        sc.function = TestFunction::new(
            TestFunctionKind::LogAbsProduct {
                zeros: vec![WeightedPoint {
                    location: Point::new(&[3.0, 0.0]),
                    mass: 1.0,
                }],
            },
            Point::new(&[0.0, 0.0]),
        )
        .unwrap();
        let reports = run_scenario(&sc).unwrap();
        assert_eq!(reports[0].check, CheckKind::HarmonicComparison);
        assert_eq!(reports[0].verdict, Verdict::Pass);
        // A function with an atom inside the closure is rejected.
        let bad = concentric_disk_scenario(vec![CheckKind::HarmonicComparison]);
        assert!(run_scenario(&bad).is_err());
    }

    #[test]
    fn interval_scenario_runs_exactly() {
        let pair = NestedPair::new(
            Domain::interval(-1.0, 1.0).unwrap(),
            Domain::interval(-2.0, 3.0).unwrap(),
            Point::new(&[0.25]),
        )
        .unwrap();
        let function = TestFunction::new(
            TestFunctionKind::ConvexPiecewiseLinear {
                slope: 1.0,
                kinks: vec![crate::testbed::Kink {
                    location: -0.5,
                    jump: 2.0,
                }],
            },
            Point::new(&[0.25]),
        )
        .unwrap();
        let eval_points: Vec<Point> = (0..7)
            .map(|i| Point::new(&[-0.75 + 0.25 * i as f64]))
            .collect();
        let sc = Scenario {
            name: "interval-kink".into(),
            pair,
            function,
            eval_points,
            gauge: Some(Gauge::power(1.0, 8.0).unwrap()),
            r: Some(0.5),
            r_x_fractions: vec![1.0, 0.5],
            params: EstimatorParams {
                samples: 512,
                seed: 11,
                ..Default::default()
            },
            mesh: 0.05,
            checks: vec![
                CheckKind::PointwiseLowerBound,
                CheckKind::RefinedLowerBound,
                CheckKind::ExceptionalSet,
                CheckKind::GreenBoundaryInf,
                CheckKind::MassBound,
            ],
            corruption: None,
            substitute_outer_sup: false,
        };
        let reports = run_scenario(&sc).unwrap();
        assert!(!reports.is_empty());
        for rep in &reports {
            assert!(
                matches!(rep.verdict, Verdict::Pass | Verdict::PassWithMc),
                "{} {} failed: lhs={} rhs={} notes={:?}",
                rep.id,
                rep.check,
                rep.lhs,
                rep.rhs,
                rep.notes
            );
            // Everything about an interval scenario is closed form.
            assert_eq!(rep.mc_half_width, 0.0, "{}", rep.id);
        }
    }

    #[test]
    fn suite_summary_counts_verdicts() {
        let sc = concentric_disk_scenario(vec![
            CheckKind::PointwiseLowerBound,
            CheckKind::GreenBoundaryInf,
        ]);
        let summary = run_suite(&[sc]).unwrap();
        assert_eq!(summary.scenarios_run, 1);
        assert_eq!(summary.fail, 0);
        assert!(summary.pass > 0);
        assert!(summary.worst_margin().is_some());
        assert!(!summary.has_failures());
    }
}

//! Builders and reports for the three example families.

use serde::{Deserialize, Serialize};

use crate::algebra::{novel_u, novel_v, robert_u, Block, K0Image, ModelAlgebra, UnitaryField};
use crate::determinant::det_bar;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::nt::{d_r, frak_d, NTBasis, NTMorphism};
use crate::openset::OpenSet;
use crate::pattern::{EigenPattern, PatternEntry};
use crate::pl::PLFunction;
use crate::rational::{q, qi, Rational};
use crate::refined::{d_star_k1, lower_bound_check_frakd, DStar, DStarScope, IdealModel};
use crate::report::{Provenance, ScenarioReport, Witness};
use crate::space::BaseSpace;
use crate::traces::h_distance;

pub const GJL_DESK: u32 = 4;
pub const STAGE_DESK: u32 = 12;

/// Stage cap, overridable through `NT_DESK_LIMIT`.
pub fn desk_limit(default: u32) -> u32 {
    std::env::var("NT_DESK_LIMIT").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

fn check_desk(n: u32, default: u32, what: &str) -> Result<()> {
    let cap = desk_limit(default);
    if n > cap {
        return Err(Error::Budget(format!("{what} {n} exceeds the desk limit {cap} (set NT_DESK_LIMIT to raise it)")));
    }
    Ok(())
}

/// `k/2^m` enumeration of the dyadics in `(0,1)`: 1/2, 1/4, 3/4, 1/8, ...
pub fn van_der_corput(count: usize) -> Vec<Rational> {
    (1..=count as i64)
        .map(|i| {
            let (mut n, mut den, mut num) = (i, 1i64, 0i64);
            while n > 0 {
                num = num * 2 + (n & 1);
                den *= 2;
                n >>= 1;
            }
            q(num, den)
        })
        .collect()
}

fn primes(count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if out.iter().take_while(|p| *p * *p <= c).all(|p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn pow(p: u64, k: u32) -> Result<u64> {
    p.checked_pow(k).ok_or_else(|| Error::Budget(format!("{p}^{k} overflows")))
}

/// Which block size feeds the winding number of the n-th partial map of the second system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindingConvention {
    /// `4^n · [n+1, n]`.
    #[default]
    NextStage,
    /// `4^n · [n, n]`.
    SameStage,
}

/// Dense sequences: interval points `t_n` and circle points `z_n` (as phases).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GjlSeeds {
    pub t: Vec<Rational>,
    pub z: Vec<Rational>,
}

impl GjlSeeds {
    pub fn van_der_corput(count: usize) -> Self {
        let t = van_der_corput(count);
        GjlSeeds { z: t.clone(), t }
    }
}

/// One partial map: the block it reads from and its pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partial {
    pub source: usize,
    pub pattern: EigenPattern,
}

/// A connecting map given block by block on the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Connecting {
    pub targets: Vec<Vec<Partial>>,
}

impl Connecting {
    fn validate(&self, from: &ModelAlgebra, to: &ModelAlgebra) -> Result<()> {
        if self.targets.len() != to.blocks.len() {
            return Err(Error::Argument("connecting map does not cover the target blocks".into()));
        }
        for (t, parts) in to.blocks.iter().zip(&self.targets) {
            let mut size = 0u64;
            for p in parts {
                let s = from.blocks.get(p.source).ok_or_else(|| Error::Argument("partial map from a missing block".into()))?;
                p.pattern.domain().same(s.base)?;
                p.pattern.codomain().same(t.base)?;
                size += s.size * p.pattern.total_mult();
            }
            if size != t.size {
                return Err(Error::Argument(format!("partial maps fill {size} of a block of size {}", t.size)));
            }
        }
        Ok(())
    }

    /// Image of a family of block unitaries.
    pub fn push(&self, us: &[UnitaryField]) -> Result<Vec<UnitaryField>> {
        self.targets
            .iter()
            .map(|parts| {
                let mut it = parts.iter().map(|p| p.pattern.push_unitary(&us[p.source]));
                let first = it.next().ok_or_else(|| Error::Argument("empty target block".into()))??;
                it.try_fold(first, |acc, u| acc.direct_sum(&u?))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GjlStage {
    pub algebra: ModelAlgebra,
    /// Maps to the next stage; absent at the last one.
    pub phi: Option<Connecting>,
    pub psi: Option<Connecting>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GjlSystem {
    pub k_sequence: Vec<u32>,
    pub primes: Vec<u64>,
    pub seeds: GjlSeeds,
    pub convention: WindingConvention,
    pub stages: Vec<GjlStage>,
}

/// `[n,i]` block sizes, `n ≥ 1`, `1 ≤ i ≤ n`.
fn bracket(p: &[u64], k: &[u32], n: usize, i: usize) -> Result<u64> {
    if i == n {
        return if n == 1 { Ok(1) } else { bracket(p, k, n, n - 1) };
    }
    let mut v = 1u64;
    for j in 1..=i {
        v = v.checked_mul(pow(p[j - 1], k[j - 1])?).ok_or_else(|| Error::Budget("block size overflows".into()))?;
    }
    for j in i + 1..n {
        v = v.checked_mul(pow(p[i - 1], k[j - 1])?).ok_or_else(|| Error::Budget("block size overflows".into()))?;
    }
    Ok(v)
}

impl GjlSystem {
    pub fn n_max(&self) -> u32 {
        self.stages.len() as u32
    }

    /// `[n,i]`.
    pub fn block_size(&self, n: usize, i: usize) -> Result<u64> {
        bracket(&self.primes, &self.k_sequence, n, i)
    }

    /// `p_n^{k_n} − 1`.
    pub fn r(&self, n: usize) -> Result<u64> {
        Ok(pow(self.primes[n - 1], self.k_sequence[n - 1])? - 1)
    }

    pub fn winding(&self, n: usize) -> Result<i64> {
        let size = match self.convention {
            WindingConvention::NextStage => bracket(&self.primes, &self.k_sequence, n + 1, n)?,
            WindingConvention::SameStage => bracket(&self.primes, &self.k_sequence, n, n)?,
        };
        4i64.checked_pow(n as u32)
            .and_then(|f| f.checked_mul(size as i64))
            .ok_or_else(|| Error::Budget("winding number overflows".into()))
    }

    fn connecting(&self, n: u32, second: bool) -> Result<&Connecting> {
        let s = self.stages.get(n as usize - 1).ok_or_else(|| Error::Argument(format!("no stage {n}")))?;
        let c = if second { &s.psi } else { &s.phi };
        c.as_ref().ok_or_else(|| Error::Argument(format!("stage {n} is the last one")))
    }

    /// The n-th partial maps `C(T) → M(C[0,1])` of both systems.
    pub fn nth_partials(&self, n: u32) -> Result<(EigenPattern, EigenPattern)> {
        let t = n as usize - 1;
        let a = &self.connecting(n, false)?.targets[t][0].pattern;
        let b = &self.connecting(n, true)?.targets[t][0].pattern;
        Ok((a.clone(), b.clone()))
    }
}

fn interval_partial(copies: u64, t: &Rational) -> Result<EigenPattern> {
    let iv = BaseSpace::Interval;
    let mut e = Vec::new();
    if copies > 0 {
        e.push(PatternEntry::pl(PLFunction::identity(iv), copies));
    }
    e.push(PatternEntry::constant(t.clone(), 1));
    EigenPattern::new(iv, iv, e)
}

fn nth_partial(r: u64, winding: Option<i64>) -> Result<EigenPattern> {
    let iv = BaseSpace::Interval;
    let id = PLFunction::identity(iv);
    let mut e = match winding {
        None => vec![PatternEntry::pl(id.clone(), 1), PatternEntry::pl(id.negate(), 1)],
        Some(l) => vec![PatternEntry::winding(l, id, qi(0), 1), PatternEntry::constant(qi(0), 1)],
    };
    let r = r as i64;
    e.extend((1..r).map(|i| PatternEntry::constant(q(i, r), 1)));
    EigenPattern::new(BaseSpace::Circle, iv, e)
}

fn circle_partial(evals: u64, z: &Rational) -> Result<EigenPattern> {
    let c = BaseSpace::Circle;
    let mut e = vec![PatternEntry::pl(PLFunction::identity(c), 1)];
    if evals > 0 {
        e.push(PatternEntry::constant(z.clone(), evals));
    }
    EigenPattern::new(c, c, e)
}

/// Stages `1..=n_max` of both inductive systems.
pub fn build_gjl(n_max: u32, k_sequence: &[u32], seeds: Option<GjlSeeds>, convention: WindingConvention) -> Result<GjlSystem> {
    if n_max == 0 {
        return Err(Error::Argument("at least one stage is needed".into()));
    }
    check_desk(n_max, GJL_DESK, "GJL stage count")?;
    let need = n_max as usize - 1;
    if k_sequence.len() < need {
        return Err(Error::Argument(format!("{n_max} stages need {need} exponents, got {}", k_sequence.len())));
    }
    if k_sequence.first().is_some_and(|k| *k < 2) || k_sequence.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("exponents must increase strictly and start at 2 or more".into()));
    }
    let seeds = seeds.unwrap_or_else(|| GjlSeeds::van_der_corput(n_max as usize));
    if seeds.t.len() < need || seeds.z.len() < need {
        return Err(Error::Argument("not enough seed points".into()));
    }
    if seeds.t.iter().any(|t| t.is_negative() || *t > Rational::one()) {
        return Err(Error::Domain("interval seeds must lie in [0,1]".into()));
    }
    let k: Vec<u32> = k_sequence[..need].to_vec();
    let p = primes(need.max(1));
    let mut sys = GjlSystem { k_sequence: k, primes: p, seeds, convention, stages: Vec::new() };
    let algebra = |n: usize| -> Result<ModelAlgebra> {
        let mut blocks = Vec::new();
        for i in 1..n {
            blocks.push(Block::new(BaseSpace::Interval, bracket(&sys.primes, &sys.k_sequence, n, i)?)?);
        }
        blocks.push(Block::new(BaseSpace::Circle, bracket(&sys.primes, &sys.k_sequence, n, n)?)?);
        ModelAlgebra::new(blocks)
    };
    let mut stages = Vec::new();
    for n in 1..=n_max as usize {
        let a = algebra(n)?;
        if n == n_max as usize {
            stages.push(GjlStage { algebra: a, phi: None, psi: None });
            break;
        }
        let next = algebra(n + 1)?;
        let t = &sys.seeds.t[n - 1];
        let z = &sys.seeds.z[n - 1];
        let pk = pow(sys.primes[n - 1], sys.k_sequence[n - 1])?;
        let r = pk - 1;
        let mut shared = Vec::new();
        for i in 1..n {
            let copies = pow(sys.primes[i - 1], sys.k_sequence[n - 1])? - 1;
            shared.push(vec![Partial { source: i - 1, pattern: interval_partial(copies, t)? }]);
        }
        let last = vec![Partial { source: n - 1, pattern: circle_partial(pk - 1, z)? }];
        let mut phi = shared.clone();
        phi.push(vec![Partial { source: n - 1, pattern: nth_partial(r, None)? }]);
        phi.push(last.clone());
        let mut psi = shared;
        psi.push(vec![Partial { source: n - 1, pattern: nth_partial(r, Some(sys.winding(n)?))? }]);
        psi.push(last);
        let (phi, psi) = (Connecting { targets: phi }, Connecting { targets: psi });
        phi.validate(&a, &next)?;
        psi.validate(&a, &next)?;
        stages.push(GjlStage { algebra: a, phi: Some(phi), psi: Some(psi) });
    }
    sys.stages = stages;
    Ok(sys)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GjlStep {
    pub n: u32,
    pub d_cu: Ext,
    pub d_star: DStar,
    /// `1/r_n`.
    pub bound: Rational,
}

impl GjlStep {
    pub fn within_bound(&self) -> bool {
        self.d_cu <= Ext::Fin(self.bound.clone()) && self.d_star.value <= Ext::Fin(self.bound.clone())
    }

    pub fn refined_equals_plain(&self) -> bool {
        self.d_star.value == self.d_cu
    }
}

/// Distances between the n-th partial maps of the two systems.
pub fn gjl_step_distance(sys: &GjlSystem, n: u32) -> Result<GjlStep> {
    if n == 0 || n >= sys.n_max() {
        return Err(Error::Argument(format!("step {n} needs 1 <= n < {}", sys.n_max())));
    }
    let (a, b) = sys.nth_partials(n)?;
    let d_star = d_star_k1(&a, &b)?;
    let r = sys.r(n as usize)? as i64;
    Ok(GjlStep { n, d_cu: d_star.epsilon0.clone(), d_star, bound: q(1, r) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GjlSide {
    Phi,
    Psi,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Obstruction {
    pub stage: u32,
    /// Norm in each interval block of the complementary ideal.
    pub per_block: Vec<Rational>,
    pub value: Rational,
}

/// Determinant of the image of `id_T ∈ A_1` in the interval blocks of stage `m`, as a norm
/// modulo constants (the limit K0 image of each block is dense); the max over blocks.
/// `id_T` pushed to every block of stage `m`.
pub fn gjl_stage_unitaries(sys: &GjlSystem, m: u32, side: GjlSide) -> Result<Vec<UnitaryField>> {
    if m == 0 || m > sys.n_max() {
        return Err(Error::Argument(format!("stage {m} is outside 1..={}", sys.n_max())));
    }
    let mut us = vec![UnitaryField::from_phases(BaseSpace::Circle, [(PLFunction::identity(BaseSpace::Circle), 1)])?];
    for n in 1..m {
        us = sys.connecting(n, side == GjlSide::Psi)?.push(&us)?;
    }
    Ok(us)
}

pub fn gjl_obstruction(sys: &GjlSystem, m: u32, side: GjlSide) -> Result<Obstruction> {
    let us = gjl_stage_unitaries(sys, m, side)?;
    let blocks = &sys.stages[m as usize - 1].algebra.blocks;
    let per_block = blocks
        .iter()
        .zip(&us)
        .filter(|(b, _)| b.base == BaseSpace::Interval)
        .map(|(b, u)| Ok(det_bar(u, &b.clone().with_k0image(K0Image::AllConstants))?.norm()))
        .collect::<Result<Vec<_>>>()?;
    let value = per_block.iter().cloned().max().unwrap_or_else(Rational::zero);
    Ok(Obstruction { stage: m, per_block, value })
}

fn scope_provenance(d: &DStar) -> Provenance {
    match d.scope {
        DStarScope::AllOpenSets => Provenance::Exact,
        DStarScope::ArcFamily { .. } => Provenance::ArcFamily,
    }
}

fn dstar_witness(name: &str, stage: u32, d: &DStar) -> Option<Witness> {
    d.witness.as_ref().map(|(arc, r)| Witness {
        quantity: name.into(),
        stage: Some(stage),
        arc: Some(arc.clone()),
        radius: Some(r.clone()),
        ..Default::default()
    })
}

/// Runs `f` over `items` on scoped threads and returns the results in order.
fn sweep<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    std::thread::scope(|s| {
        let hs: Vec<_> = items.iter().map(|x| s.spawn(|| f(x))).collect();
        hs.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Step distances for `n < n_max` and both obstruction sequences.
pub fn gjl_report(n_max: u32, k_sequence: &[u32], convention: WindingConvention) -> Result<ScenarioReport> {
    let sys = build_gjl(n_max, k_sequence, None, convention)?;
    let mut rep = ScenarioReport::new("gjl");
    rep.param("nmax", n_max);
    rep.param("kseq", sys.k_sequence.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
    rep.param("winding", match convention {
        WindingConvention::NextStage => "4^n[n+1,n]",
        WindingConvention::SameStage => "4^n[n,n]",
    });
    rep.notes.push(format!(
        "winding numbers l_n = {} use the {:?} convention for the undefined block index",
        (1..n_max).map(|n| sys.winding(n as usize).map(|l| l.to_string())).collect::<Result<Vec<_>>>()?.join(", "),
        convention
    ));
    let steps: Vec<u32> = (1..n_max).collect();
    for s in sweep(&steps, |n| gjl_step_distance(&sys, *n))? {
        let st = Some(s.n);
        rep.push("r_n", st, qi(sys.r(s.n as usize)? as i64), Provenance::Exact);
        rep.push("d_cu", st, s.d_cu.clone(), Provenance::Exact);
        rep.push("dstar_k1", st, s.d_star.value.clone(), scope_provenance(&s.d_star));
        rep.push("bound_1_over_r", st, s.bound.clone(), Provenance::Exact);
        rep.witnesses.extend(dstar_witness("dstar_k1", s.n, &s.d_star));
        rep.check(&format!("step {} within 1/r_n", s.n), s.within_bound(), format!("d_cu = {}, d* = {}, 1/r_n = {}", s.d_cu, s.d_star.value, s.bound));
        rep.check(&format!("step {} refined equals plain", s.n), s.refined_equals_plain(), format!("d* = {}, d_cu = {}", s.d_star.value, s.d_cu));
    }
    let mut prev: Option<Rational> = None;
    let mut increasing = true;
    let mut reached = None;
    for m in 1..=n_max {
        let a = gjl_obstruction(&sys, m, GjlSide::Phi)?;
        let b = gjl_obstruction(&sys, m, GjlSide::Psi)?;
        rep.push("obstruction_phi", Some(m), a.value.clone(), Provenance::Exact);
        rep.push("obstruction_psi", Some(m), b.value.clone(), Provenance::Exact);
        rep.check(&format!("phi obstruction vanishes at stage {m}"), a.value.is_zero(), a.value.to_string());
        if let Some(p) = &prev {
            increasing &= b.value > *p;
        }
        if reached.is_none() && b.value >= qi(3) {
            reached = Some(m);
        }
        prev = Some(b.value);
    }
    rep.check("psi obstruction strictly increasing", increasing, String::new());
    match reached {
        Some(m) => {
            rep.push("psi_stage_reaching_3", None, qi(m as i64), Provenance::Exact);
            rep.check("psi obstruction reaches 3", true, format!("first at stage {m}"));
        }
        None => rep.check("psi obstruction reaches 3", false, format!("not within {n_max} stages")),
    }
    rep.notes.push("obstructions use the canonical section id_T only, not every section".into());
    Ok(rep)
}

fn robert_morphism(k: i64, n: u32) -> Result<(EigenPattern, NTMorphism)> {
    let u = robert_u(k, n)?;
    Ok((EigenPattern::from_unitary(&u)?, NTMorphism::from_unitary(&u, K0Image::AllConstants)?))
}

/// The pair `u_k, u_l`: stage distances for stages `1..=n_stage`, and the three summands of
/// the rotation-map metric.
pub fn robert_report(k: i64, l: i64, n_stage: u32) -> Result<ScenarioReport> {
    if k < 0 || l < 0 {
        return Err(Error::Argument("k and l must be nonnegative".into()));
    }
    if n_stage == 0 {
        return Err(Error::Argument("stages start at 1".into()));
    }
    check_desk(n_stage, STAGE_DESK, "stage")?;
    let mut rep = ScenarioReport::new("robert");
    rep.param("k", k);
    rep.param("l", l);
    rep.param("stage", n_stage);
    let stages: Vec<u32> = (1..=n_stage).collect();
    let ds = sweep(&stages, |n| {
        let (a, _) = robert_morphism(k, *n)?;
        let (b, _) = robert_morphism(l, *n)?;
        d_star_k1(&a, &b)
    })?;
    let mut all = true;
    for (n, d) in stages.iter().zip(&ds) {
        rep.push("d_cu", Some(*n), d.epsilon0.clone(), Provenance::Exact);
        rep.push("dstar_k1", Some(*n), d.value.clone(), scope_provenance(d));
        rep.witnesses.extend(dstar_witness("dstar_k1", *n, d));
        all &= d.value <= Ext::Fin(q(1, 1 << n));
    }
    rep.check("stage d* <= 1/2^n", all, String::new());
    let (_, a) = robert_morphism(k, n_stage)?;
    let (_, b) = robert_morphism(l, n_stage)?;
    let c = NTBasis::canonical(1)?;
    let d = NTBasis::trivial();
    let fd = frak_d(&a, &b, &c, &d)?;
    rep.push("h_distance", Some(n_stage), fd.d_h.clone(), Provenance::Exact);
    let limit = fd.with_h(Rational::zero());
    rep.push("frakd_h", None, Rational::zero(), Provenance::Limit);
    rep.push("frakd_r", Some(n_stage), limit.d_r.clone(), Provenance::Exact);
    rep.push("frakd_triv", Some(n_stage), limit.d_triv.clone(), Provenance::Exact);
    rep.push("frakd", None, limit.total.clone(), Provenance::Limit);
    let want = q((k - l).abs(), 2);
    rep.check("frakd = |k-l|/2", limit.total == Ext::Fin(want.clone()), format!("{} vs {want}", limit.total));
    rep.notes.push("the H-summand vanishes in the limit because the stage d_cu tends to 0; the stage value is listed as h_distance".into());
    Ok(rep)
}

/// The ideal generated by the indicator of the arc `(0, 1/4)`.
pub fn novel_ideal() -> Result<IdealModel> {
    Ok(IdealModel::new(OpenSet::arc(qi(0), q(1, 4))?))
}

/// The pair `u_n, v_n`: stage distances for stages `2..=n_stage`, the rotation-map metric
/// and the fiber lower bound at the arc ideal.
pub fn novel_report(n_stage: u32) -> Result<ScenarioReport> {
    if n_stage < 2 {
        return Err(Error::Argument("the novel example starts at stage 2".into()));
    }
    check_desk(n_stage, STAGE_DESK, "stage")?;
    let mut rep = ScenarioReport::new("novel");
    rep.param("stage", n_stage);
    let pats = |n: u32| -> Result<(EigenPattern, EigenPattern)> {
        Ok((EigenPattern::from_unitary(&novel_u(n)?)?, EigenPattern::from_unitary(&novel_v(n)?)?))
    };
    let stages: Vec<u32> = (2..=n_stage).collect();
    let ds = sweep(&stages, |n| {
        let (a, b) = pats(*n)?;
        d_star_k1(&a, &b)
    })?;
    let mut within = true;
    let mut halving = true;
    for (i, (n, d)) in stages.iter().zip(&ds).enumerate() {
        rep.push("d_cu", Some(*n), d.epsilon0.clone(), Provenance::Exact);
        rep.push("dstar_k1", Some(*n), d.value.clone(), scope_provenance(d));
        rep.witnesses.extend(dstar_witness("dstar_k1", *n, d));
        within &= d.value <= Ext::Fin(q(1, 1 << (n - 1)));
        if i > 0 {
            halving &= ds[i - 1].value == d.value.scale(&qi(2));
        }
    }
    rep.check("stage d* <= 1/2^(n-1)", within, String::new());
    rep.check("stage d* halves per stage", halving, String::new());
    let (a, b) = pats(n_stage)?;
    let c = NTBasis::canonical(1)?;
    let ma = NTMorphism::from_unitary(&novel_u(n_stage)?, K0Image::AllConstants)?;
    let mb = NTMorphism::from_unitary(&novel_v(n_stage)?, K0Image::AllConstants)?;
    let fd = frak_d(&ma, &mb, &c, &NTBasis::trivial())?.with_h(Rational::zero());
    rep.push("h_distance", Some(n_stage), h_distance(&a, &b, &K0Image::AllConstants)?, Provenance::Exact);
    rep.push("frakd_h", None, Rational::zero(), Provenance::Limit);
    rep.push("frakd_r", Some(n_stage), d_r(&ma, &mb, &c, &NTBasis::trivial())?, Provenance::Exact);
    rep.push("frakd_triv", Some(n_stage), fd.d_triv.clone(), Provenance::Exact);
    rep.push("frakd", None, fd.total.clone(), Provenance::Limit);
    rep.check("frakd = 0", fd.total == Ext::zero(), fd.total.to_string());
    let lb = lower_bound_check_frakd(&a, &b, &novel_ideal()?, &K0Image::AllConstants)?;
    let star = lb.value.scale(&q(1, 4));
    rep.push("fiber_norm", Some(n_stage), lb.value.clone(), Provenance::LowerBound);
    rep.push("frakd_star_lower", None, star.clone(), Provenance::LowerBound);
    rep.check("fiber norm >= 1/2", lb.value >= Ext::Fin(q(1, 2)), lb.value.to_string());
    rep.check("frakd* lower bound >= 1/8", star >= Ext::Fin(q(1, 8)), star.to_string());
    rep.notes.push("the fiber norm leaves out the H-map summand, so it bounds the rotation-map metric from below".into());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> GjlSystem {
        build_gjl(4, &[2, 3, 4], None, WindingConvention::NextStage).unwrap()
    }

    #[test]
    fn block_sizes() {
        let s = sys();
        assert_eq!(s.stages[0].algebra.sizes(), vec![1]);
        assert_eq!(s.stages[1].algebra.sizes(), vec![4, 4]);
        assert_eq!(s.stages[2].algebra.sizes(), vec![32, 108, 108]);
        assert_eq!(s.stages[3].algebra.sizes(), vec![512, 8748, 67500, 67500]);
        assert_eq!(s.winding(1).unwrap(), 16);
        assert_eq!(s.winding(2).unwrap(), 16 * 108);
        assert_eq!(s.r(2).unwrap(), 26);
    }

    #[test]
    fn first_partial_of_second_step() {
        let s = sys();
        let p = &s.stages[1].phi.as_ref().unwrap().targets[0][0].pattern;
        // [3,1]/[2,1] = 8: seven copies and one evaluation at t_2
        assert_eq!(p.entries()[0].mult, 7);
        assert_eq!(p.entries()[1], PatternEntry::constant(q(1, 4), 1));
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(build_gjl(3, &[1, 3], None, WindingConvention::NextStage).is_err());
        assert!(build_gjl(3, &[3, 3], None, WindingConvention::NextStage).is_err());
        assert!(build_gjl(3, &[2], None, WindingConvention::NextStage).is_err());
    }

    #[test]
    fn small_steps() {
        let s = sys();
        let a = gjl_step_distance(&s, 1).unwrap();
        assert!(a.within_bound() && a.refined_equals_plain());
        assert_eq!(a.d_cu, Ext::Fin(q(1, 3)));
        let b = gjl_step_distance(&s, 2).unwrap();
        assert!(b.d_cu <= Ext::Fin(q(1, 26)));
    }

    #[test]
    fn obstructions() {
        let s = sys();
        let phi: Vec<Rational> = (1..=4).map(|m| gjl_obstruction(&s, m, GjlSide::Phi).unwrap().value).collect();
        let psi: Vec<Rational> = (1..=4).map(|m| gjl_obstruction(&s, m, GjlSide::Psi).unwrap().value).collect();
        assert!(phi.iter().all(|v| v.is_zero()));
        assert!(psi.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(psi[1..], [qi(2), qi(8), qi(32)]);
    }

    #[test]
    fn dyadic_seeds() {
        assert_eq!(van_der_corput(4), vec![q(1, 2), q(1, 4), q(3, 4), q(1, 8)]);
    }

    #[test]
    fn robert_formula() {
        let r = robert_report(3, 7, 2).unwrap();
        assert_eq!(r.get("frakd", None), Some(&Ext::Fin(qi(2))));
        assert!(r.passed());
        let z = robert_report(2, 2, 1).unwrap();
        assert_eq!(z.get("frakd", None), Some(&Ext::zero()));
        assert_eq!(z.get("d_cu", Some(1)), Some(&Ext::zero()));
    }

    #[test]
    fn novel_small() {
        let r = novel_report(3).unwrap();
        assert!(r.passed(), "{}", r.table());
        assert_eq!(r.get("fiber_norm", Some(3)), Some(&Ext::Fin(q(3, 4))));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = serde_json::to_string(&novel_report(3).unwrap()).unwrap();
        let b = serde_json::to_string(&novel_report(3).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

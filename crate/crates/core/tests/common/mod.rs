//! Reference implementations written independently of the library, used as
//! oracles by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `H(X|Y)` by enumerating the joint pmf of a binary source observed through
/// a binary asymmetric channel.
pub fn conditional_entropy_bruteforce(p0: f64, e01: f64, e10: f64) -> f64 {
    let px = [p0, 1.0 - p0];
    // cond[x][y]
    let cond = [[1.0 - e01, e01], [e10, 1.0 - e10]];
    let mut h = 0.0;
    for y in 0..2 {
        let py: f64 = (0..2).map(|x| px[x] * cond[x][y]).sum();
        for x in 0..2 {
            let pxy = px[x] * cond[x][y];
            if pxy > 0.0 {
                h -= pxy * (pxy / py).log2();
            }
        }
    }
    h
}

/// `I(Z; Ẑ)` of a binary asymmetric channel with input law `P(Z=0) = q`.
pub fn mutual_information_bruteforce(q: f64, e01: f64, e10: f64) -> f64 {
    let pz = [q, 1.0 - q];
    let cond = [[1.0 - e01, e01], [e10, 1.0 - e10]];
    let out: Vec<f64> = (0..2).map(|o| (0..2).map(|z| pz[z] * cond[z][o]).sum()).collect();
    let h_out: f64 = out.iter().map(|&p| plogp(p)).sum();
    let h_cond: f64 = (0..2).map(|z| pz[z] * cond[z].iter().map(|&p| plogp(p)).sum::<f64>()).sum();
    h_out - h_cond
}

/// Capacity by a dense scan of the input law followed by local refinement.
pub fn capacity_bruteforce(e01: f64, e10: f64) -> f64 {
    let mut best = (0.0, 0.5);
    for i in 0..=10_000 {
        let q = i as f64 / 10_000.0;
        let v = mutual_information_bruteforce(q, e01, e10);
        if v > best.0 {
            best = (v, q);
        }
    }
    let (mut lo, mut hi) = ((best.1 - 1e-4).max(0.0), (best.1 + 1e-4).min(1.0));
    for _ in 0..100 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if mutual_information_bruteforce(a, e01, e10) < mutual_information_bruteforce(b, e01, e10) {
            lo = a;
        } else {
            hi = b;
        }
    }
    mutual_information_bruteforce(0.5 * (lo + hi), e01, e10)
}

/// `-ln tanh(x/2) = ln((1 + e^-x) / (1 - e^-x))`, accurate for large `x`.
fn f(x: f64) -> f64 {
    let e = (-x).exp();
    e.ln_1p() - (-e).ln_1p()
}

/// All-zero-codeword density evolution for a regular `(dv, dc)` code on a
/// symmetric channel. Densities live on `2n + 1` bins of width `delta`;
/// the check node works on `points` log-spaced magnitudes
/// `y = -ln tanh(|m|/2)` between `f(n·delta)` and `f(delta/2)`, combining
/// every pair of grid points directly.
pub struct ClassicalDe {
    pub n: usize,
    pub delta: f64,
    points: usize,
    to_y: Vec<usize>,
    to_bin: Vec<usize>,
    offset: Vec<usize>,
}

impl ClassicalDe {
    pub fn new(delta: f64, llr_max: f64, points: usize) -> Self {
        let n = (llr_max / delta).round() as usize;
        let y_lo = f(n as f64 * delta);
        let y_hi = f(0.5 * delta);
        let step = (y_hi / y_lo).ln() / (points as f64 - 1.0);
        let to_y = (0..=n)
            .map(|j| {
                if j == 0 {
                    usize::MAX
                } else {
                    let k = ((f(j as f64 * delta) / y_lo).ln() / step).round();
                    k.max(0.0).min(points as f64 - 1.0) as usize
                }
            })
            .collect();
        let to_bin = (0..points)
            .map(|k| {
                let y = y_lo * (k as f64 * step).exp();
                ((f(y) / delta).round() as usize).min(n)
            })
            .collect();
        // Index offset of y_a + y_b above the larger index a, for a - b = d.
        let offset = (0..points)
            .map(|d| ((1.0 + (-(d as f64) * step).exp()).ln() / step).round() as usize)
            .collect();
        Self {
            n,
            delta,
            points,
            to_y,
            to_bin,
            offset,
        }
    }

    pub fn bins(&self) -> usize {
        2 * self.n + 1
    }

    /// Two-point channel density of a BSC with crossover `p`.
    pub fn bsc(&self, p: f64) -> Vec<f64> {
        let l = ((1.0 - p) / p).ln();
        let j = ((l / self.delta).round() as usize).min(self.n);
        let mut d = vec![0.0; self.bins()];
        d[self.n + j] += 1.0 - p;
        d[self.n - j] += p;
        d
    }

    /// `(plus, minus, erased)` on the magnitude grid.
    fn signed_y(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let mut plus = vec![0.0; self.points];
        let mut minus = vec![0.0; self.points];
        for j in 1..=self.n {
            let k = self.to_y[j];
            plus[k] += p[self.n + j];
            minus[k] += p[self.n - j];
        }
        (plus, minus, p[self.n])
    }

    /// Law of the check output for `dc - 1` independent inputs from `p`.
    pub fn check(&self, p: &[f64], dc: usize) -> Vec<f64> {
        let (bp, bm, be) = self.signed_y(p);
        let (mut cp, mut cm, mut ce) = (bp.clone(), bm.clone(), be);
        let base_total: f64 = bp.iter().sum::<f64>() + bm.iter().sum::<f64>() + be;
        for _ in 1..dc - 1 {
            let total: f64 = cp.iter().sum::<f64>() + cm.iter().sum::<f64>() + ce;
            let mut np = vec![0.0; self.points];
            let mut nm = vec![0.0; self.points];
            let mut spill = 0.0;
            for a in 0..self.points {
                let (ap, am) = (cp[a], cm[a]);
                if ap == 0.0 && am == 0.0 {
                    continue;
                }
                for b in 0..self.points {
                    let (xp, xm) = (bp[b], bm[b]);
                    if xp == 0.0 && xm == 0.0 {
                        continue;
                    }
                    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                    let k = hi + self.offset[hi - lo];
                    let same = ap * xp + am * xm;
                    let diff = ap * xm + am * xp;
                    if k < self.points {
                        np[k] += same;
                        nm[k] += diff;
                    } else {
                        spill += same + diff;
                    }
                }
            }
            ce = ce * base_total + be * total - ce * be + spill;
            cp = np;
            cm = nm;
        }
        let mut out = vec![0.0; self.bins()];
        out[self.n] += ce;
        for k in 0..self.points {
            let j = self.to_bin[k];
            out[self.n + j] += cp[k];
            out[self.n - j] += cm[k];
        }
        let t: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= t);
        out
    }

    /// Full linear convolution of two densities indexed from `-len/2`.
    fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &y) in out[i..].iter_mut().zip(b) {
                *o += x * y;
            }
        }
        out
    }

    /// Variable-to-check density and the wrong-decision probability of the
    /// posterior, for a degree-`dv` node fed channel density `p0` and check
    /// density `q`.
    pub fn variable(&self, p0: &[f64], q: &[f64], dv: usize) -> (Vec<f64>, f64) {
        let mut full = p0.to_vec();
        for _ in 0..dv - 1 {
            full = Self::convolve(&full, q);
        }
        // full[i] sits at LLR (i - half)·delta.
        let half = (full.len() - 1) / 2;
        // P(msg + q < 0) + ½ P(msg + q = 0), with q's CDF.
        let mut below = vec![0.0; q.len() + 1];
        for (i, &v) in q.iter().enumerate() {
            below[i + 1] = below[i] + v;
        }
        let mut pe = 0.0;
        for (i, &m) in full.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            // Need q-bin t with (i - half) + (t - n) < 0, i.e. t < n + half - i.
            let lim = self.n as i64 + half as i64 - i as i64;
            let strict = lim.clamp(0, q.len() as i64) as usize;
            let mut w = below[strict];
            if lim >= 0 && (lim as usize) < q.len() {
                w += 0.5 * q[lim as usize];
            }
            pe += m * w;
        }
        let mut msg = vec![0.0; self.bins()];
        for (i, &v) in full.iter().enumerate() {
            let s = (i as i64 - half as i64).clamp(-(self.n as i64), self.n as i64);
            msg[(s + self.n as i64) as usize] += v;
        }
        let t: f64 = msg.iter().sum();
        msg.iter_mut().for_each(|v| *v /= t);
        (msg, pe)
    }

    /// Runs up to `iters` iterations on a BSC; returns per-iteration message
    /// densities and posterior error probabilities.
    pub fn run(&self, p: f64, dv: usize, dc: usize, iters: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let p0 = self.bsc(p);
        let mut msg = p0.clone();
        let mut dens = Vec::new();
        let mut errs = Vec::new();
        for _ in 0..iters {
            let q = self.check(&msg, dc);
            let (m, pe) = self.variable(&p0, &q, dv);
            msg = m;
            dens.push(msg.clone());
            errs.push(pe);
        }
        (dens, errs)
    }

    /// True when the error probability drops below `target` within `iters`.
    pub fn converges(&self, p: f64, dv: usize, dc: usize, iters: usize, target: f64) -> bool {
        let p0 = self.bsc(p);
        let mut msg = p0.clone();
        let mut last = 1.0;
        for it in 0..iters {
            let q = self.check(&msg, dc);
            let (m, pe) = self.variable(&p0, &q, dv);
            if pe < target {
                return true;
            }
            if it % 20 == 19 {
                if (last - pe).abs() <= 1e-9 * last {
                    return false;
                }
                last = pe;
            }
            msg = m;
        }
        false
    }
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Split ensemble as plain degree tables: `(degree, edge fraction)`.
#[derive(Clone, Debug)]
pub struct Tables {
    pub lambda_s: Vec<(usize, f64)>,
    pub lambda_p: Vec<(usize, f64)>,
    pub rho: Vec<(usize, f64)>,
}

/// Operating point: source prior and correlation channel, transmission
/// channel, parity prior.
#[derive(Clone, Copy, Debug)]
pub struct Setting {
    pub p_s0: f64,
    pub e01: f64,
    pub e10: f64,
    pub e01z: f64,
    pub e10z: f64,
    pub p_p0: f64,
}

struct Sampler {
    degrees: Vec<usize>,
    cdf: Vec<f64>,
}

impl Sampler {
    fn new(weights: &[(usize, f64)]) -> Self {
        let total: f64 = weights.iter().map(|w| w.1).sum();
        let mut acc = 0.0;
        let mut cdf = Vec::new();
        for w in weights {
            acc += w.1 / total;
            cdf.push(acc);
        }
        Self {
            degrees: weights.iter().map(|w| w.0).collect(),
            cdf,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let i = self.cdf.iter().position(|&c| u < c).unwrap_or(self.cdf.len() - 1);
        self.degrees[i]
    }
}

/// Population dynamics: sampled tree-based density evolution that conditions
/// each check message on the bit of its destination by rejection.
pub struct PopulationDynamics {
    t: Tables,
    s: Setting,
    rng: ChaCha8Rng,
    /// Per class: (bit, message) pairs of the current iteration.
    pools: [Vec<(u8, f64)>; 2],
    alpha_s: f64,
    rate: f64,
    edge: [Sampler; 2],
    node: [Sampler; 2],
    check: Sampler,
}

const CLAMP: f64 = 30.0;

impl PopulationDynamics {
    pub fn new(t: Tables, s: Setting, size: usize, seed: u64) -> Self {
        let sum = |v: &[(usize, f64)]| v.iter().map(|w| w.1).sum::<f64>();
        let inv = |v: &[(usize, f64)]| v.iter().map(|w| w.1 / w.0 as f64).sum::<f64>();
        let alpha_s = sum(&t.lambda_s) / (sum(&t.lambda_s) + sum(&t.lambda_p));
        let rate = inv(&t.lambda_p) / inv(&t.lambda_s);
        let nodes = |v: &[(usize, f64)]| -> Vec<(usize, f64)> { v.iter().map(|&(d, w)| (d, w / d as f64)).collect() };
        let mut me = Self {
            edge: [Sampler::new(&t.lambda_s), Sampler::new(&t.lambda_p)],
            node: [Sampler::new(&nodes(&t.lambda_s)), Sampler::new(&nodes(&t.lambda_p))],
            check: Sampler::new(&t.rho),
            t,
            s,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pools: [Vec::new(), Vec::new()],
            alpha_s,
            rate,
        };
        for c in 0..2 {
            let pool = (0..size)
                .map(|_| {
                    let x = me.bit(c);
                    (x, me.channel_llr(c, x))
                })
                .collect();
            me.pools[c] = pool;
        }
        me
    }

    fn bit(&mut self, class: usize) -> u8 {
        let p0 = if class == 0 { self.s.p_s0 } else { self.s.p_p0 };
        u8::from(self.rng.gen::<f64>() >= p0)
    }

    fn channel_llr(&mut self, class: usize, x: u8) -> f64 {
        let s = self.s;
        let (e01, e10) = if class == 0 { (s.e01, s.e10) } else { (s.e01z, s.e10z) };
        let u: f64 = self.rng.gen();
        let out = if x == 0 { u < e01 } else { u >= e10 };
        let (p0, p1) = if out { (e01, 1.0 - e10) } else { (1.0 - e01, e10) };
        let prior = if class == 0 { (s.p_s0 / (1.0 - s.p_s0)).ln() } else { 0.0 };
        prior + (p0 / p1).ln()
    }

    fn check_message(&mut self, x: u8) -> f64 {
        let d = self.check.draw(&mut self.rng);
        loop {
            let mut t = 1.0;
            let mut parity = 0u8;
            for _ in 0..d - 1 {
                let c = usize::from(self.rng.gen::<f64>() >= self.alpha_s);
                let i = self.rng.gen_range(0..self.pools[c].len());
                let (b, m) = self.pools[c][i];
                parity ^= b;
                t *= (0.5 * m.clamp(-CLAMP, CLAMP)).tanh();
            }
            if parity == x {
                let t = t.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                return (2.0 * t.atanh()).clamp(-CLAMP, CLAMP);
            }
        }
    }

    fn node_sample(&mut self, class: usize, posterior: bool) -> (u8, f64) {
        let x = self.bit(class);
        let mut s = self.channel_llr(class, x);
        let d = if posterior {
            self.node[class].draw(&mut self.rng)
        } else {
            self.edge[class].draw(&mut self.rng) - 1
        };
        for _ in 0..d {
            s += self.check_message(x);
        }
        (x, s)
    }

    /// Codeword-averaged error probability of the posteriors built from the
    /// current pools, with its standard error.
    pub fn error_probability(&mut self, samples: usize) -> (f64, f64) {
        let mut pe = [0.0; 2];
        for (c, slot) in pe.iter_mut().enumerate() {
            let mut wrong = 0.0;
            for _ in 0..samples {
                let (x, s) = self.node_sample(c, true);
                wrong += if s == 0.0 {
                    0.5
                } else if (s < 0.0) == (x == 0) {
                    1.0
                } else {
                    0.0
                };
            }
            *slot = wrong / samples as f64;
        }
        let r = self.rate;
        let var = |p: f64| p * (1.0 - p) / samples as f64;
        let mean = (pe[0] + r * pe[1]) / (1.0 + r);
        let sd = (var(pe[0]) + r * r * var(pe[1])).sqrt() / (1.0 + r);
        (mean, sd)
    }

    /// Replaces both pools with the next iteration's messages.
    pub fn step(&mut self) {
        let size = self.pools[0].len();
        let next: [Vec<(u8, f64)>; 2] = [0, 1].map(|c| (0..size).map(|_| self.node_sample(c, false)).collect());
        self.pools = next;
    }

    pub fn tables(&self) -> &Tables {
        &self.t
    }
}

/// Source/parity tables of the published `C1`.
pub fn c1_tables() -> Tables {
    Tables {
        lambda_s: vec![(3, 0.2362), (5, 0.2270)],
        lambda_p: vec![(2, 0.1610), (20, 0.3758)],
        rho: vec![(10, 0.9229), (11, 0.0771)],
    }
}

/// Tanner graph with `k` source nodes of degree 3 on distinct random checks
/// and an accumulator parity part: parity `j` sits on checks `j` and `j+1`.
pub fn small_code(k: usize, m: usize, seed: u64) -> djscc::graph::TannerGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks: Vec<Vec<u32>> = vec![Vec::new(); m];
    for v in 0..k {
        let mut chosen: Vec<usize> = Vec::new();
        while chosen.len() < 3.min(m) {
            let c = rng.gen_range(0..m);
            if !chosen.contains(&c) {
                chosen.push(c);
            }
        }
        for c in chosen {
            checks[c].push(v as u32);
        }
    }
    for j in 0..m {
        checks[j].push((k + j) as u32);
        if j + 1 < m {
            checks[j + 1].push((k + j) as u32);
        }
    }
    djscc::graph::TannerGraph::from_checks(k, m, checks).expect("valid toy graph")
}

/// Like [`small_code`] but without 4-cycles: no two variable nodes, parity
/// chain included, share two checks. Panics when no such code is found.
pub fn short_code(k: usize, m: usize, seed: u64) -> djscc::graph::TannerGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..1000 {
        let mut used: std::collections::HashSet<(usize, usize)> = (1..m).map(|j| (j - 1, j)).collect();
        let mut checks: Vec<Vec<u32>> = vec![Vec::new(); m];
        for v in 0..k {
            let mut placed = false;
            for _ in 0..1000 {
                let mut c: Vec<usize> = rand::seq::index::sample(&mut rng, m, 3).into_vec();
                c.sort_unstable();
                let pairs = [(c[0], c[1]), (c[0], c[2]), (c[1], c[2])];
                if pairs.iter().all(|p| !used.contains(p)) {
                    used.extend(pairs);
                    for x in c {
                        checks[x].push(v as u32);
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        for j in 0..m {
            checks[j].push((k + j) as u32);
            if j + 1 < m {
                checks[j + 1].push((k + j) as u32);
            }
        }
        return djscc::graph::TannerGraph::from_checks(k, m, checks).expect("valid toy graph");
    }
    panic!("no 4-cycle-free code with k = {k}, m = {m}");
}

/// Exact posterior quantities from enumerating all `2^k` messages under the
/// joint likelihood: prior, side information and received parity.
pub struct MapEstimate {
    /// Most probable message.
    pub block: Vec<u8>,
    /// Bitwise maximizers of the marginals.
    pub bitwise: Vec<u8>,
    /// `ln P(x_i = 0 | ·) - ln P(x_i = 1 | ·)`.
    pub llr: Vec<f64>,
}

pub fn map_estimates(
    enc: &djscc::encoder::SystematicEncoder,
    side: &[u32],
    received: &[u8],
    s: &Setting,
) -> MapEstimate {
    let k = side.len();
    let mut marg = vec![[0.0f64; 2]; k];
    let mut best = (f64::NEG_INFINITY, 0u64);
    let cond = |x: u8, y: u32| -> f64 {
        match (x, y) {
            (0, 0) => 1.0 - s.e01,
            (0, _) => s.e01,
            (_, 0) => s.e10,
            _ => 1.0 - s.e10,
        }
    };
    let trans = |z: u8, zh: u8| -> f64 {
        match (z, zh) {
            (0, 0) => 1.0 - s.e01z,
            (0, _) => s.e01z,
            (_, 0) => s.e10z,
            _ => 1.0 - s.e10z,
        }
    };
    let bits = |word: u64| -> Vec<u8> { (0..k).map(|i| ((word >> i) & 1) as u8).collect() };
    for word in 0u64..(1 << k) {
        let x = bits(word);
        let z = enc.encode(&x).expect("encodes");
        let mut w = 1.0;
        for i in 0..k {
            let prior = if x[i] == 0 { s.p_s0 } else { 1.0 - s.p_s0 };
            w *= prior * cond(x[i], side[i]);
        }
        for (j, &zj) in z.iter().enumerate() {
            w *= trans(zj, received[j]);
        }
        if w > best.0 {
            best = (w, word);
        }
        for i in 0..k {
            marg[i][x[i] as usize] += w;
        }
    }
    MapEstimate {
        block: bits(best.1),
        bitwise: marg.iter().map(|m| u8::from(m[1] > m[0])).collect(),
        llr: marg.iter().map(|m| m[0].ln() - m[1].ln()).collect(),
    }
}

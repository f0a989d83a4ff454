//! Truncated multivariate Taylor jets in up to four variables, order <= 3.
//!
//! A jet stores c_alpha = (1/alpha!) d^alpha f at a base point. Arithmetic and the
//! elementary functions follow the product and chain rules exactly at the truncation
//! order, so derivatives of composed closed-form fields carry no differencing error.

use crate::gamma::{Mat4, C64, ONE, ZERO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Arc, OnceLock};
use thiserror::Error;

pub const NVARS: usize = 4;
pub const MAX_ORDER: u8 = 3;
pub const NCOEF: usize = 35;
/// Number of coefficients for orders 0..=3.
const NCOEF_BY_ORDER: [usize; 4] = [1, 5, 15, 35];

pub type MultiIndex = [u8; NVARS];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet order {0} outside 1..=3")]
    BadOrder(u8),
    #[error("field is singular or non-finite at the base point")]
    Singular,
    #[error("jet order {have} is too low for a derivative of order {need}")]
    InsufficientOrder { have: u8, need: u8 },
}

struct Tables {
    mi: Vec<MultiIndex>,
    deg: Vec<u8>,
    lookup: [u8; 256],
    /// (i, j, k) with mi[i] + mi[j] = mi[k], sorted by deg(k).
    mul: Vec<(u8, u8, u8)>,
    /// mul entries with deg(k) <= order form the prefix mul[..mul_len[order]].
    mul_len: [usize; 4],
}

fn key(m: &MultiIndex) -> usize {
    (m[0] as usize) * 64 + (m[1] as usize) * 16 + (m[2] as usize) * 4 + m[3] as usize
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut mi: Vec<MultiIndex> = Vec::with_capacity(NCOEF);
        for d in 0..=MAX_ORDER {
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    for c in (0..=d - a - b).rev() {
                        mi.push([a, b, c, d - a - b - c]);
                    }
                }
            }
        }
        let deg: Vec<u8> = mi.iter().map(|m| m.iter().sum()).collect();
        let mut lookup = [u8::MAX; 256];
        for (i, m) in mi.iter().enumerate() {
            lookup[key(m)] = i as u8;
        }
        let mut mul = Vec::new();
        for i in 0..NCOEF {
            for j in 0..NCOEF {
                if deg[i] + deg[j] <= MAX_ORDER {
                    let s: MultiIndex = std::array::from_fn(|v| mi[i][v] + mi[j][v]);
                    mul.push((i as u8, j as u8, lookup[key(&s)]));
                }
            }
        }
        mul.sort_by_key(|&(_, _, k)| deg[k as usize]);
        let mul_len = std::array::from_fn(|o| mul.iter().filter(|&&(_, _, k)| deg[k as usize] as usize <= o).count());
        Tables { mi, deg, lookup, mul, mul_len }
    })
}

fn index_of(m: &MultiIndex) -> Option<usize> {
    if m.iter().map(|&x| x as u32).sum::<u32>() > MAX_ORDER as u32 {
        return None;
    }
    match tables().lookup[key(m)] {
        u8::MAX => None,
        i => Some(i as usize),
    }
}

/// A truncated Taylor jet of a complex scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: u8,
    c: [C64; NCOEF],
}

impl Jet {
    /// Constant jet; constants carry the maximal order so they never truncate a product.
    pub fn constant(v: C64) -> Self {
        let mut c = [ZERO; NCOEF];
        c[0] = v;
        Jet { order: MAX_ORDER, c }
    }

    pub fn real(v: f64) -> Self {
        Jet::constant(C64::from(v))
    }

    /// The coordinate function x_var at base value `base`.
    pub fn var(var: usize, base: C64, order: u8) -> Self {
        assert!(var < NVARS && order <= MAX_ORDER);
        let mut j = Jet::constant(base);
        j.order = order;
        if order >= 1 {
            j.c[1 + var] = ONE;
        }
        j
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    fn ncoef(&self) -> usize {
        NCOEF_BY_ORDER[self.order as usize]
    }

    /// Taylor coefficient for a multi-index; zero above the order.
    pub fn coeff(&self, m: &MultiIndex) -> C64 {
        match index_of(m) {
            Some(i) if i < self.ncoef() => self.c[i],
            _ => ZERO,
        }
    }

    /// The partial derivative d^m f at the base point.
    pub fn derivative(&self, m: &MultiIndex) -> C64 {
        let fact: f64 = m.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product();
        self.coeff(m) * fact
    }

    /// Jet of d f / d x_var, one order lower.
    pub fn partial(&self, var: usize) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::InsufficientOrder { have: 0, need: 1 });
        }
        let t = tables();
        let mut out = Jet { order: self.order - 1, c: [ZERO; NCOEF] };
        for i in 0..out.ncoef() {
            let mut up = t.mi[i];
            up[var] += 1;
            let k = t.lookup[key(&up)] as usize;
            out.c[i] = self.c[k] * up[var] as f64;
        }
        Ok(out)
    }

    /// Applies d^m; errors if the jet order is too low.
    pub fn partial_multi(&self, m: &MultiIndex) -> Result<Jet, JetError> {
        let need: u8 = m.iter().sum();
        if need > self.order {
            return Err(JetError::InsufficientOrder { have: self.order, need });
        }
        let mut j = *self;
        for (v, &k) in m.iter().enumerate() {
            for _ in 0..k {
                j = j.partial(v)?;
            }
        }
        Ok(j)
    }

    pub fn with_order(&self, order: u8) -> Jet {
        let mut j = *self;
        if order < j.order {
            j.order = order;
            for v in j.c[NCOEF_BY_ORDER[order as usize]..].iter_mut() {
                *v = ZERO;
            }
        }
        j
    }

    pub fn is_finite(&self) -> bool {
        self.c[..self.ncoef()].iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&self, s: C64) -> Jet {
        let mut j = *self;
        j.c.iter_mut().for_each(|v| *v *= s);
        j
    }

    /// Univariate composition: `taylor[n]` holds f^(n)(a)/n! at a = self.value().
    pub fn compose(&self, taylor: [C64; 4]) -> Jet {
        let mut h = *self;
        h.c[0] = ZERO;
        let mut acc = Jet::constant(taylor[self.order as usize]).with_order(self.order);
        for n in (0..self.order as usize).rev() {
            acc = acc * h;
            acc.c[0] += taylor[n];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e * 0.5, e / 6.0])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([a.ln(), r, -r * r * 0.5, r * r * r / 3.0])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (self.value().sin(), self.value().cos());
        self.compose([s, c, -s * 0.5, -c / 6.0])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (self.value().sin(), self.value().cos());
        self.compose([c, -s, -c * 0.5, s / 6.0])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([s, c, s * 0.5, c / 6.0])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([c, s, c * 0.5, s / 6.0])
    }

    /// Principal branch power a^p.
    pub fn powc(&self, p: C64) -> Jet {
        let a = self.value();
        let f = |k: f64| if a == ZERO && p != C64::from(k) && (p - k).re <= 0.0 { C64::new(f64::INFINITY, 0.0) } else { a.powc(p - k) };
        self.compose([
            f(0.0),
            p * f(1.0),
            p * (p - 1.0) * 0.5 * f(2.0),
            p * (p - 1.0) * (p - 2.0) / 6.0 * f(3.0),
        ])
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(ONE);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    pub fn sqrt(&self) -> Jet {
        self.powc(C64::from(0.5))
    }

    pub fn recip(&self) -> Jet {
        let r = 1.0 / self.value();
        self.compose([r, -r * r, r * r * r, -r * r * r * r])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let order = self.order.min(o.order);
        let n = NCOEF_BY_ORDER[order as usize];
        let mut c = [ZERO; NCOEF];
        for i in 0..n {
            c[i] = self.c[i] + o.c[i];
        }
        Jet { order, c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-ONE)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let t = tables();
        let order = self.order.min(o.order);
        let mut c = [ZERO; NCOEF];
        for &(i, j, k) in &t.mul[..t.mul_len[order as usize]] {
            let (a, b) = (self.c[i as usize], o.c[j as usize]);
            if a != ZERO && b != ZERO {
                c[k as usize] += a * b;
            }
        }
        Jet { order, c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, o: Jet) {
        *self = *self * o;
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(mut self, v: C64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, v: C64) -> Jet {
        self.scale(v)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(C64::from(v))
    }
}

/// Common interface of C64 and Jet so closed-form formulas run on both.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Add<C64, Output = Self>
    + Mul<C64, Output = Self>
{
    fn cst(v: C64) -> Self;
    fn re(v: f64) -> Self {
        Self::cst(C64::from(v))
    }
    fn val(&self) -> C64;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powc(&self, p: C64) -> Self;
    fn recip(&self) -> Self;
    fn powi(&self, n: u32) -> Self {
        let mut out = Self::re(1.0);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }
}

impl Scalar for C64 {
    fn cst(v: C64) -> Self {
        v
    }
    fn val(&self) -> C64 {
        *self
    }
    fn exp(&self) -> Self {
        C64::exp(*self)
    }
    fn ln(&self) -> Self {
        C64::ln(*self)
    }
    fn sin(&self) -> Self {
        C64::sin(*self)
    }
    fn cos(&self) -> Self {
        C64::cos(*self)
    }
    fn sinh(&self) -> Self {
        C64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        C64::cosh(*self)
    }
    fn sqrt(&self) -> Self {
        C64::sqrt(*self)
    }
    fn powc(&self, p: C64) -> Self {
        C64::powc(*self, p)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
}

impl Scalar for Jet {
    fn cst(v: C64) -> Self {
        Jet::constant(v)
    }
    fn val(&self) -> C64 {
        self.value()
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn sinh(&self) -> Self {
        Jet::sinh(self)
    }
    fn cosh(&self) -> Self {
        Jet::cosh(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn powc(&self, p: C64) -> Self {
        Jet::powc(self, p)
    }
    fn recip(&self) -> Self {
        Jet::recip(self)
    }
}

/// Coordinate jets at a point.
pub type Coords = [Jet; NVARS];

/// Coordinate jets at a (possibly complex) base point; unused slots are constant zero.
pub fn coords_at(point: &[C64], order: u8) -> Coords {
    std::array::from_fn(|i| match point.get(i) {
        Some(&p) => Jet::var(i, p, order),
        None => Jet::constant(ZERO),
    })
}

pub fn coords_real(point: &[f64], order: u8) -> Coords {
    let p: Vec<C64> = point.iter().map(|&x| C64::from(x)).collect();
    coords_at(&p, order)
}

/// Lifts a closed-form scalar field to its jet at `point`.
pub fn jet_lift<F: Fn(&Coords) -> Jet>(f: F, point: &[C64], order: u8) -> Result<Jet, JetError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(JetError::BadOrder(order));
    }
    let j = f(&coords_at(point, order));
    if j.is_finite() {
        Ok(j)
    } else {
        Err(JetError::Singular)
    }
}

pub type SpinorJet = [Jet; 4];

/// A 4-spinor field rule, evaluated on coordinate jets.
pub trait SpinorField: Send + Sync {
    fn eval(&self, x: &Coords) -> SpinorJet;
}

impl<F: Fn(&Coords) -> SpinorJet + Send + Sync> SpinorField for F {
    fn eval(&self, x: &Coords) -> SpinorJet {
        self(x)
    }
}

pub type FieldRef = Arc<dyn SpinorField>;

pub fn spinor_values(s: &SpinorJet) -> [C64; 4] {
    s.map(|j| j.value())
}

pub fn mat_apply<T: Scalar>(m: &Mat4, v: &[T; 4]) -> [T; 4] {
    std::array::from_fn(|i| {
        let mut acc = T::re(0.0);
        for (j, vj) in v.iter().enumerate() {
            let a = m.0[i][j];
            if a != ZERO {
                acc = acc + *vj * a;
            }
        }
        acc
    })
}

#[derive(Clone, Debug)]
struct Component {
    a0: C64,
    lin: [C64; NVARS],
    quad: [[C64; NVARS]; NVARS],
    sin_amp: C64,
    sin_k: [f64; NVARS],
    sin_ph: f64,
    cos_amp: C64,
    cos_k: [f64; NVARS],
    cos_ph: f64,
    gauss_amp: C64,
    gauss_c: [f64; NVARS],
}

/// Smooth random 4-spinor built from sin, cos, a Gaussian and quadratics.
#[derive(Clone, Debug)]
pub struct RandomSpinor {
    comps: [Component; 4],
}

fn rc<R: Rng>(r: &mut R) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

pub fn random_test_spinor(seed: u64) -> RandomSpinor {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let comps = std::array::from_fn(|_| Component {
        a0: rc(&mut r),
        lin: std::array::from_fn(|_| rc(&mut r)),
        quad: std::array::from_fn(|_| std::array::from_fn(|_| rc(&mut r))),
        sin_amp: rc(&mut r),
        sin_k: std::array::from_fn(|_| r.gen_range(-1.0..1.0)),
        sin_ph: r.gen_range(0.0..std::f64::consts::TAU),
        cos_amp: rc(&mut r),
        cos_k: std::array::from_fn(|_| r.gen_range(-1.0..1.0)),
        cos_ph: r.gen_range(0.0..std::f64::consts::TAU),
        gauss_amp: rc(&mut r),
        gauss_c: std::array::from_fn(|_| r.gen_range(-1.0..1.0)),
    });
    RandomSpinor { comps }
}

impl RandomSpinor {
    pub fn component<T: Scalar>(&self, k: usize, x: &[T; NVARS]) -> T {
        let c = &self.comps[k];
        let mut acc = T::cst(c.a0);
        let mut sarg = T::re(c.sin_ph);
        let mut carg = T::re(c.cos_ph);
        let mut r2 = T::re(0.0);
        for i in 0..NVARS {
            acc = acc + x[i] * c.lin[i];
            for j in i..NVARS {
                acc = acc + x[i] * x[j] * (c.quad[i][j] * 0.5);
            }
            sarg = sarg + x[i] * c.sin_k[i];
            carg = carg + x[i] * c.cos_k[i];
            let d = x[i] + (-c.gauss_c[i]);
            r2 = r2 + d * d;
        }
        acc + sarg.sin() * c.sin_amp + carg.cos() * c.cos_amp + (-r2).exp() * c.gauss_amp
    }

    pub fn values(&self, x: &[C64; NVARS]) -> [C64; 4] {
        std::array::from_fn(|k| self.component(k, x))
    }
}

impl SpinorField for RandomSpinor {
    fn eval(&self, x: &Coords) -> SpinorJet {
        std::array::from_fn(|k| self.component(k, x))
    }
}

/// Jets of a vector y with dy/dx_i = A_i(x) y, built from the value at the point.
///
/// `rhs(i, y)` must return A_i y evaluated with coordinate jets of order `order`.
/// Each pass fixes one more degree of coefficients.
pub fn holonomic_lift<F>(value: &[C64], order: u8, nvars: usize, mut rhs: F) -> Vec<Jet>
where
    F: FnMut(usize, &[Jet]) -> Vec<Jet>,
{
    let t = tables();
    let mut y: Vec<Jet> = value.iter().map(|&v| Jet::constant(v).with_order(order)).collect();
    for k in 1..=order {
        let w: Vec<Vec<Jet>> = (0..nvars).map(|i| rhs(i, &y)).collect();
        for idx in NCOEF_BY_ORDER[k as usize - 1]..NCOEF_BY_ORDER[k as usize] {
            debug_assert_eq!(t.deg[idx], k);
            let m = t.mi[idx];
            let Some(i) = (0..nvars).find(|&i| m[i] > 0) else {
                continue;
            };
            let mut lower = m;
            lower[i] -= 1;
            let li = t.lookup[key(&lower)] as usize;
            for (comp, yc) in y.iter_mut().enumerate() {
                yc.c[idx] = w[i][comp].c[li] / m[i] as f64;
            }
        }
    }
    y
}

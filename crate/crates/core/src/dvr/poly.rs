use rand::Rng;

use super::{is_prime, Dvr, DvrError, Valuation};

/// Dense polynomial over `F_q`, lowest degree first, no trailing zeros.
type Poly = Vec<u64>;

/// Element of `F_q[t]_(t)` in lowest terms with `den(0) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn numerator(&self) -> &[u64] {
        &self.num
    }

    pub fn denominator(&self) -> &[u64] {
        &self.den
    }
}

/// `F_q[t]` localized at `(t)`, uniformizer `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyDvr {
    q: u64,
}

impl PolyDvr {
    pub fn new(q: u64) -> Result<Self, DvrError> {
        if !is_prime(q) || q > u32::MAX as u64 {
            return Err(DvrError::NotPrime(q));
        }
        Ok(Self { q })
    }

    pub fn field_size(&self) -> u64 {
        self.q
    }

    fn trim(mut p: Poly) -> Poly {
        while p.last() == Some(&0) {
            p.pop();
        }
        p
    }

    fn p_add(&self, a: &[u64], b: &[u64]) -> Poly {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % self.q)
            .collect();
        Self::trim(out)
    }

    fn p_neg(&self, a: &[u64]) -> Poly {
        a.iter().map(|&c| (self.q - c) % self.q).collect()
    }

    fn p_mul(&self, a: &[u64], b: &[u64]) -> Poly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % self.q;
            }
        }
        Self::trim(out)
    }

    fn p_scale(&self, a: &[u64], k: u64) -> Poly {
        Self::trim(a.iter().map(|&c| c * k % self.q).collect())
    }

    fn inv(&self, a: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(self.q));
        // Fermat: a^(q-2)
        let (mut base, mut exp, mut acc) = (a % self.q, self.q - 2, 1u64);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.q;
            }
            base = base * base % self.q;
            exp >>= 1;
        }
        acc
    }

    fn p_divrem(&self, a: &[u64], b: &[u64]) -> (Poly, Poly) {
        assert!(!b.is_empty(), "polynomial division by zero");
        let mut rem = a.to_vec();
        if rem.len() < b.len() {
            return (Vec::new(), rem);
        }
        let lead_inv = self.inv(*b.last().unwrap());
        let mut quot = vec![0u64; rem.len() - b.len() + 1];
        for k in (0..quot.len()).rev() {
            let c = rem[k + b.len() - 1] * lead_inv % self.q;
            quot[k] = c;
            if c != 0 {
                for (j, &bj) in b.iter().enumerate() {
                    rem[k + j] = (rem[k + j] + self.q - c * bj % self.q) % self.q;
                }
            }
        }
        (Self::trim(quot), Self::trim(rem))
    }

    fn p_gcd(&self, a: &[u64], b: &[u64]) -> Poly {
        let (mut x, mut y) = (a.to_vec(), b.to_vec());
        while !y.is_empty() {
            let (_, r) = self.p_divrem(&x, &y);
            x = y;
            y = r;
        }
        if x.is_empty() {
            return x;
        }
        let lead_inv = self.inv(*x.last().unwrap());
        self.p_scale(&x, lead_inv)
    }

    fn low_order(p: &[u64]) -> u32 {
        p.iter().take_while(|&&c| c == 0).count() as u32
    }

    /// Brings `num/den` to canonical form; fails if the fraction is not in `O`.
    fn normalize(&self, num: Poly, den: Poly) -> Result<RatFunc, DvrError> {
        let num = Self::trim(num);
        let den = Self::trim(den);
        if den.is_empty() {
            return Err(DvrError::DivisionByZero);
        }
        if num.is_empty() {
            return Ok(RatFunc {
                num: Vec::new(),
                den: vec![1],
            });
        }
        let g = self.p_gcd(&num, &den);
        let (num, _) = self.p_divrem(&num, &g);
        let (den, _) = self.p_divrem(&den, &g);
        if den[0] == 0 {
            return Err(DvrError::NotInRing(
                self.format_elem(&RatFunc { num, den }).to_string(),
            ));
        }
        let k = self.inv(den[0]);
        Ok(RatFunc {
            num: self.p_scale(&num, k),
            den: self.p_scale(&den, k),
        })
    }

    fn canon(&self, num: Poly, den: Poly) -> RatFunc {
        self.normalize(num, den)
            .expect("ring operations stay inside the valuation ring")
    }

    fn parse_poly(&self, s: &str, whole: &str) -> Result<Poly, DvrError> {
        let s = s.trim();
        let body = match s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            Some(inner) => inner,
            None => {
                let k: i64 = s.parse().map_err(|_| {
                    DvrError::Parse(whole.to_string(), format!("bad polynomial `{s}`"))
                })?;
                return Ok(Self::trim(vec![k.rem_euclid(self.q as i64) as u64]));
            }
        };
        let mut out = Vec::new();
        for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let k: i64 = tok.parse().map_err(|_| {
                DvrError::Parse(whole.to_string(), format!("bad coefficient `{tok}`"))
            })?;
            out.push(k.rem_euclid(self.q as i64) as u64);
        }
        Ok(Self::trim(out))
    }

    fn format_poly(p: &[u64]) -> String {
        let coeffs: Vec<String> = p.iter().map(u64::to_string).collect();
        format!("[{}]", coeffs.join(","))
    }
}

impl Dvr for PolyDvr {
    type Elem = RatFunc;

    fn label(&self) -> String {
        format!("poly:{}", self.q)
    }

    fn characteristic(&self) -> u64 {
        self.q
    }

    fn zero(&self) -> RatFunc {
        RatFunc {
            num: Vec::new(),
            den: vec![1],
        }
    }

    fn one(&self) -> RatFunc {
        RatFunc {
            num: vec![1],
            den: vec![1],
        }
    }

    fn from_i64(&self, k: i64) -> RatFunc {
        self.canon(vec![k.rem_euclid(self.q as i64) as u64], vec![1])
    }

    fn add(&self, x: &RatFunc, y: &RatFunc) -> RatFunc {
        if x.den == y.den {
            return self.canon(self.p_add(&x.num, &y.num), x.den.clone());
        }
        let num = self.p_add(&self.p_mul(&x.num, &y.den), &self.p_mul(&y.num, &x.den));
        self.canon(num, self.p_mul(&x.den, &y.den))
    }

    fn sub(&self, x: &RatFunc, y: &RatFunc) -> RatFunc {
        self.add(x, &self.neg(y))
    }

    fn mul(&self, x: &RatFunc, y: &RatFunc) -> RatFunc {
        self.canon(self.p_mul(&x.num, &y.num), self.p_mul(&x.den, &y.den))
    }

    fn neg(&self, x: &RatFunc) -> RatFunc {
        RatFunc {
            num: self.p_neg(&x.num),
            den: x.den.clone(),
        }
    }

    fn is_zero(&self, x: &RatFunc) -> bool {
        x.num.is_empty()
    }

    fn ord(&self, x: &RatFunc) -> Valuation {
        if x.num.is_empty() {
            Valuation::Infinite
        } else {
            Valuation::Finite(Self::low_order(&x.num))
        }
    }

    fn uniformizer_power(&self, k: u32) -> RatFunc {
        let mut num = vec![0u64; k as usize];
        num.push(1);
        RatFunc { num, den: vec![1] }
    }

    fn divide_exact(&self, x: &RatFunc, y: &RatFunc) -> Result<RatFunc, DvrError> {
        if y.num.is_empty() {
            return Err(DvrError::DivisionByZero);
        }
        let (ox, oy) = (self.ord(x), self.ord(y));
        if ox < oy {
            return Err(DvrError::NotDivisible {
                numerator: ox,
                denominator: oy,
            });
        }
        self.normalize(self.p_mul(&x.num, &y.den), self.p_mul(&x.den, &y.num))
    }

    fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> RatFunc {
        let draw = |rng: &mut R| -> Poly {
            let deg = rng.random_range(0..=2usize);
            let mut p: Poly = (0..=deg).map(|_| rng.random_range(0..self.q)).collect();
            p[0] = rng.random_range(1..self.q);
            Self::trim(p)
        };
        let num = draw(rng);
        let den = draw(rng);
        self.canon(num, den)
    }

    fn parse_elem(&self, s: &str) -> Result<RatFunc, DvrError> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (self.parse_poly(n, s)?, self.parse_poly(d, s)?),
            None => (self.parse_poly(s, s)?, vec![1]),
        };
        if den.is_empty() {
            return Err(DvrError::Parse(s.to_string(), "zero denominator".into()));
        }
        self.normalize(num, den)
            .map_err(|_| DvrError::NotInRing(s.to_string()))
    }

    fn format_elem(&self, x: &RatFunc) -> String {
        if x.num.is_empty() {
            return "0".into();
        }
        if x.den == [1] {
            Self::format_poly(&x.num)
        } else {
            format!(
                "{}/{}",
                Self::format_poly(&x.num),
                Self::format_poly(&x.den)
            )
        }
    }
}

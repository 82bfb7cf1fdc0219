use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{is_prime, Dvr, DvrError, Valuation};

/// `Z_(p)`: rationals with denominator prime to `p`, uniformizer `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalDvr {
    p: BigInt,
    p_small: u64,
}

impl RationalDvr {
    pub fn new(p: u64) -> Result<Self, DvrError> {
        if !is_prime(p) {
            return Err(DvrError::NotPrime(p));
        }
        Ok(Self {
            p: BigInt::from(p),
            p_small: p,
        })
    }

    pub fn prime(&self) -> u64 {
        self.p_small
    }

    fn p_adic_ord(&self, n: &BigInt) -> u32 {
        debug_assert!(!n.is_zero());
        let mut k = 0;
        let mut m = n.clone();
        loop {
            let (q, r) = m.div_rem(&self.p);
            if !r.is_zero() {
                return k;
            }
            m = q;
            k += 1;
        }
    }
}

impl Dvr for RationalDvr {
    type Elem = BigRational;

    fn label(&self) -> String {
        format!("rational:{}", self.p_small)
    }

    fn characteristic(&self) -> u64 {
        self.p_small
    }

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }

    fn one(&self) -> BigRational {
        BigRational::one()
    }

    fn from_i64(&self, k: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(k))
    }

    fn add(&self, x: &BigRational, y: &BigRational) -> BigRational {
        x + y
    }

    fn sub(&self, x: &BigRational, y: &BigRational) -> BigRational {
        x - y
    }

    fn mul(&self, x: &BigRational, y: &BigRational) -> BigRational {
        x * y
    }

    fn neg(&self, x: &BigRational) -> BigRational {
        -x
    }

    fn is_zero(&self, x: &BigRational) -> bool {
        x.is_zero()
    }

    fn ord(&self, x: &BigRational) -> Valuation {
        if x.is_zero() {
            Valuation::Infinite
        } else {
            // Denominators are prime to p, so only the numerator contributes.
            Valuation::Finite(self.p_adic_ord(x.numer()))
        }
    }

    fn uniformizer_power(&self, k: u32) -> BigRational {
        BigRational::from_integer(num_traits::pow(self.p.clone(), k as usize))
    }

    fn divide_exact(&self, x: &BigRational, y: &BigRational) -> Result<BigRational, DvrError> {
        if y.is_zero() {
            return Err(DvrError::DivisionByZero);
        }
        let (ox, oy) = (self.ord(x), self.ord(y));
        if ox < oy {
            return Err(DvrError::NotDivisible {
                numerator: ox,
                denominator: oy,
            });
        }
        Ok(x / y)
    }

    fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> BigRational {
        let numer = loop {
            let k: i64 = rng.random_range(1..=40);
            if !(k as u64).is_multiple_of(self.p_small) {
                break k;
            }
        };
        let denom = loop {
            let k: i64 = rng.random_range(1..=12);
            if !(k as u64).is_multiple_of(self.p_small) {
                break k;
            }
        };
        let sign = if rng.random_bool(0.5) { -1 } else { 1 };
        BigRational::new(BigInt::from(sign * numer), BigInt::from(denom))
    }

    fn parse_elem(&self, s: &str) -> Result<BigRational, DvrError> {
        let parse_int = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|e| DvrError::Parse(s.to_string(), e.to_string()))
        };
        let value = match s.split_once('/') {
            Some((n, d)) => {
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(DvrError::Parse(s.to_string(), "zero denominator".into()));
                }
                BigRational::new(parse_int(n)?, d)
            }
            None => BigRational::from_integer(parse_int(s)?),
        };
        if !value.is_zero() && self.p_adic_ord(value.denom()) > 0 {
            return Err(DvrError::NotInRing(s.to_string()));
        }
        Ok(value)
    }

    fn format_elem(&self, x: &BigRational) -> String {
        if x.denom().is_one() {
            x.numer().to_string()
        } else {
            format!("{}/{}", x.numer(), x.denom().abs())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dvr() -> RationalDvr {
        RationalDvr::new(5).unwrap()
    }

    #[test]
    fn ord_examples() {
        let d = dvr();
        assert_eq!(d.ord(&d.zero()), Valuation::Infinite);
        let x = d.parse_elem("25/3").unwrap();
        assert_eq!(d.ord(&x), Valuation::Finite(2));
        assert_eq!(d.ord(&d.parse_elem("-7").unwrap()), Valuation::Finite(0));
    }

    #[test]
    fn uniformizer_powers() {
        let d = dvr();
        assert_eq!(d.uniformizer_power(0), d.one());
        assert_eq!(d.uniformizer_power(3), d.from_i64(125));
        assert_eq!(d.ord(&d.uniformizer_power(7)), Valuation::Finite(7));
    }

    #[test]
    fn exact_division() {
        let d = dvr();
        let pi = d.uniformizer_power(1);
        assert_eq!(
            d.divide_exact(&d.uniformizer_power(3), &pi),
            Ok(d.uniformizer_power(2))
        );
        assert_eq!(d.divide_exact(&d.zero(), &pi), Ok(d.zero()));
        assert!(matches!(
            d.divide_exact(&pi, &d.uniformizer_power(2)),
            Err(DvrError::NotDivisible { .. })
        ));
        assert_eq!(
            d.divide_exact(&pi, &d.zero()),
            Err(DvrError::DivisionByZero)
        );
    }

    #[test]
    fn rejects_non_integral_and_composite() {
        let d = dvr();
        assert!(matches!(d.parse_elem("1/5"), Err(DvrError::NotInRing(_))));
        assert!(matches!(d.parse_elem("x"), Err(DvrError::Parse(..))));
        assert!(matches!(d.parse_unit("10"), Err(DvrError::NotUnit(_))));
        assert_eq!(RationalDvr::new(6), Err(DvrError::NotPrime(6)));
    }

    #[test]
    fn random_units_are_units() {
        let d = dvr();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let u = d.random_unit(&mut rng);
            assert_eq!(d.ord(&u), Valuation::Finite(0));
        }
    }

    #[test]
    fn format_parse_roundtrip() {
        let d = dvr();
        for s in ["0", "125", "-50/3", "7/12"] {
            let x = d.parse_elem(s).unwrap();
            assert_eq!(d.parse_elem(&d.format_elem(&x)).unwrap(), x);
        }
    }
}

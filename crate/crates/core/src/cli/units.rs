//! Unit-suffixed values accepted on the command line and in config files.
//!
//! Bare numbers are read in kelvin, hertz and dBm respectively.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::constants::dbm_to_watts;

fn split_unit(s: &str) -> (&str, &str) {
    let s = s.trim();
    let idx = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    // an exponent like `1e-3` is not a unit
    let (num, unit) = s.split_at(idx);
    if unit.eq_ignore_ascii_case("e") {
        return (s, "");
    }
    (num.trim(), unit)
}

fn number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

macro_rules! quantity {
    ($name:ident, $what:literal, $parse:expr) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name(pub f64);

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                let (num, unit) = split_unit(s);
                let v = number(num)?;
                let f: fn(f64, &str) -> Option<f64> = $parse;
                f(v, unit)
                    .map($name)
                    .ok_or_else(|| format!("unknown {} unit `{unit}` in `{s}`", $what))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(self.0)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $name;
                    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                        write!(f, "a {} as a number or a string with unit", $what)
                    }
                    fn visit_f64<E: de::Error>(self, v: f64) -> Result<$name, E> {
                        format!("{v:e}").parse().map_err(E::custom)
                    }
                    fn visit_i64<E: de::Error>(self, v: i64) -> Result<$name, E> {
                        self.visit_f64(v as f64)
                    }
                    fn visit_u64<E: de::Error>(self, v: u64) -> Result<$name, E> {
                        self.visit_f64(v as f64)
                    }
                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$name, E> {
                        v.parse().map_err(E::custom)
                    }
                }
                d.deserialize_any(V)
            }
        }
    };
}

quantity!(Plain, "number", |v, u| u.is_empty().then_some(v));

quantity!(Temperature, "temperature", |v, u| match u {
    "" | "K" => Some(v),
    "mK" => Some(v * 1e-3),
    "uK" => Some(v * 1e-6),
    _ => None,
});

quantity!(Frequency, "frequency", |v, u| match u {
    "" | "Hz" => Some(v),
    "kHz" => Some(v * 1e3),
    "MHz" => Some(v * 1e6),
    "GHz" => Some(v * 1e9),
    _ => None,
});

quantity!(Power, "power", |v, u| match u {
    "" | "dBm" => Some(dbm_to_watts(v)),
    "W" => Some(v),
    "mW" => Some(v * 1e-3),
    "uW" => Some(v * 1e-6),
    "nW" => Some(v * 1e-9),
    "pW" => Some(v * 1e-12),
    "fW" => Some(v * 1e-15),
    "aW" => Some(v * 1e-18),
    _ => None,
});

quantity!(Duration, "time", |v, u| match u {
    "" | "s" => Some(v),
    "ms" => Some(v * 1e-3),
    "us" => Some(v * 1e-6),
    "ns" => Some(v * 1e-9),
    _ => None,
});

quantity!(Length, "length", |v, u| match u {
    "" | "m" => Some(v),
    "mm" => Some(v * 1e-3),
    "um" => Some(v * 1e-6),
    "nm" => Some(v * 1e-9),
    _ => None,
});

/// `start:stop:count`, endpoints inclusive, each endpoint parsed as `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range<Q> {
    pub start: Q,
    pub stop: Q,
    pub count: usize,
}

impl<Q: FromStr<Err = String>> FromStr for Range<Q> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("range `{s}` must look like start:stop:count"));
        };
        let count: usize = n.trim().parse().map_err(|_| format!("bad count `{n}` in range `{s}`"))?;
        if count == 0 {
            return Err(format!("range `{s}` has zero points"));
        }
        Ok(Range { start: a.parse()?, stop: b.parse()?, count })
    }
}

impl<Q> Range<Q> {
    fn endpoints(&self, get: impl Fn(&Q) -> f64) -> (f64, f64) {
        (get(&self.start), get(&self.stop))
    }
}

impl<Q: Copy> Range<Q> {
    /// Evenly spaced in the value returned by `axis` (e.g. dBm for powers),
    /// mapped back through `back`.
    pub fn points_by(&self, axis: impl Fn(&Q) -> f64, back: impl Fn(f64) -> f64) -> Vec<f64> {
        let (a, b) = self.endpoints(axis);
        if self.count == 1 {
            return vec![back(a)];
        }
        (0..self.count).map(|i| back(a + (b - a) * i as f64 / (self.count - 1) as f64)).collect()
    }
}

impl<Q: Serialize> Serialize for Range<Q> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Range", 3)?;
        st.serialize_field("start", &self.start)?;
        st.serialize_field("stop", &self.stop)?;
        st.serialize_field("count", &self.count)?;
        st.end()
    }
}

impl<'de, Q: FromStr<Err = String>> Deserialize<'de> for Range<Q> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{} K", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::watts_to_dbm;

    #[test]
    fn parses_suffixes() {
        assert_eq!("50mK".parse::<Temperature>().unwrap().0, 0.05);
        assert_eq!("0.3".parse::<Temperature>().unwrap().0, 0.3);
        assert!((watts_to_dbm("-109dBm".parse::<Power>().unwrap().0) + 109.0).abs() < 1e-12);
        assert!((watts_to_dbm("-109".parse::<Power>().unwrap().0) + 109.0).abs() < 1e-12);
        assert_eq!("1e-15W".parse::<Power>().unwrap().0, 1e-15);
        assert_eq!("520.5MHz".parse::<Frequency>().unwrap().0, 520.5e6);
        assert_eq!("2e3".parse::<Frequency>().unwrap().0, 2e3);
        assert!("3 furlongs".parse::<Length>().is_err());
    }

    #[test]
    fn ranges() {
        let r: Range<Frequency> = "-3:3:601".parse().unwrap();
        let v = r.points_by(|q| q.0, |x| x);
        assert_eq!(v.len(), 601);
        assert_eq!(v[0], -3.0);
        assert_eq!(v[600], 3.0);
        assert!("1:2".parse::<Range<Frequency>>().is_err());
    }
}

//! Seeded fresh-name generation shared by both sides of a perturbation.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::PerturbationType;
use crate::lexer::is_reserved_word;

pub const NAME_LEN: usize = 5;
pub const MAX_ATTEMPTS: usize = 100;

/// Seed for one (instance, operator) pair: the global seed mixed with a
/// stable hash of the instance id and operator.
pub fn instance_seed(global: u64, instance_id: &str, ptype: PerturbationType) -> u64 {
    let mut h = Sha256::new();
    h.update(instance_id.as_bytes());
    h.update([0u8]);
    h.update(ptype.id().as_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    global ^ u64::from_le_bytes(b)
}

/// Words of a free-text comment that look like identifiers.
pub fn comment_words(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let s = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            out.push((s, i));
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Replace whole identifier-like words of `text` per `map`, simultaneously.
pub fn rewrite_words(text: &str, map: &HashMap<String, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (s, e) in comment_words(text) {
        if let Some(to) = map.get(&text[s..e]) {
            out.push_str(&text[last..s]);
            out.push_str(to);
            last = e;
        }
    }
    out.push_str(&text[last..]);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameCollision;

/// Generates five-letter lowercase names that collide with nothing in the
/// method, its revision, the comment, or earlier generated names. Names
/// are memoised by key so both sides of a pair receive the same ones.
pub struct NameGen {
    rng: ChaCha8Rng,
    taken: HashSet<String>,
    memo: HashMap<String, String>,
}

impl NameGen {
    pub fn new(seed: u64, taken: HashSet<String>) -> Self {
        NameGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            taken,
            memo: HashMap::new(),
        }
    }

    pub fn is_taken(&self, name: &str) -> bool {
        self.taken.contains(name)
    }

    fn fresh(&mut self) -> Result<String, NameCollision> {
        for _ in 0..MAX_ATTEMPTS {
            let name: String = (0..NAME_LEN)
                .map(|_| char::from(b'a' + self.rng.random_range(0..26u8)))
                .collect();
            if !is_reserved_word(&name) && !self.taken.contains(&name) {
                self.taken.insert(name.clone());
                return Ok(name);
            }
        }
        Err(NameCollision)
    }

    /// A fresh name for `key`, the same one on every call with that key.
    pub fn keyed(&mut self, key: &str) -> Result<String, NameCollision> {
        if let Some(n) = self.memo.get(key) {
            return Ok(n.clone());
        }
        let n = self.fresh()?;
        self.memo.insert(key.to_string(), n.clone());
        Ok(n)
    }

    /// `preferred` unless it is already taken, otherwise a fresh name.
    pub fn preferred(&mut self, key: &str, preferred: &str) -> Result<String, NameCollision> {
        if let Some(n) = self.memo.get(key) {
            return Ok(n.clone());
        }
        let n = if self.taken.contains(preferred) {
            self.fresh()?
        } else {
            self.taken.insert(preferred.to_string());
            preferred.to_string()
        };
        self.memo.insert(key.to_string(), n.clone());
        Ok(n)
    }

    /// A permutation of `pool` without fixed points.
    pub fn derangement(&mut self, pool: &[String]) -> Vec<String> {
        let mut perm = pool.to_vec();
        if pool.len() < 2 {
            return perm;
        }
        loop {
            perm.shuffle(&mut self.rng);
            if perm.iter().zip(pool).all(|(a, b)| a != b) {
                return perm;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_fresh_and_memoised() {
        let taken: HashSet<String> = ["alpha".to_string()].into();
        let mut g = NameGen::new(7, taken);
        let a = g.keyed("x").unwrap();
        let b = g.keyed("y").unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.chars().all(|c| c.is_ascii_lowercase()));
        assert_ne!(a, b);
        assert_eq!(g.keyed("x").unwrap(), a);
        assert_eq!(g.preferred("v", "alpha").unwrap().len(), 5);
        assert_eq!(g.preferred("w", "var").unwrap(), "var");
    }

    #[test]
    fn derangement_has_no_fixed_points() {
        let pool: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut g = NameGen::new(1, HashSet::new());
        for _ in 0..50 {
            let p = g.derangement(&pool);
            assert!(p.iter().zip(&pool).all(|(x, y)| x != y));
        }
    }

    #[test]
    fn comment_rewrite_is_whole_word() {
        let map: HashMap<String, String> = [("i".to_string(), "j".to_string())].into();
        assert_eq!(rewrite_words("use i, not it or i2", &map), "use j, not it or i2");
    }
}

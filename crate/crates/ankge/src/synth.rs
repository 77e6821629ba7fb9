//! Generator for small compositional knowledge graphs.
//!
//! People live in cities, cities lie in countries, countries have an
//! official language, and people work for companies based in cities. The
//! derived relations `citizen_of` and `speaks` follow from chains of the
//! base relations, so entities of the same kind share relational patterns.

use std::fmt::Write as _;
use std::path::Path;

use ankge_core::RawTriple;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub people: usize,
    pub cities: usize,
    pub countries: usize,
    pub languages: usize,
    pub companies: usize,
    /// Friend edges per person, drawn mostly inside the same city.
    pub friends: usize,
    /// Fraction of derived triples held out for each of valid and test.
    pub holdout: f64,
    /// Fraction of derived triples whose tail is replaced at random.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            people: 600,
            cities: 40,
            countries: 10,
            languages: 6,
            companies: 30,
            friends: 2,
            holdout: 0.15,
            noise: 0.02,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub train: Vec<RawTriple>,
    pub valid: Vec<RawTriple>,
    pub test: Vec<RawTriple>,
}

impl SynthDataset {
    /// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, split) in [("train.txt", &self.train), ("valid.txt", &self.valid), ("test.txt", &self.test)] {
            let mut text = String::new();
            for t in split {
                writeln!(text, "{}\t{}\t{}", t.head, t.relation, t.tail).unwrap();
            }
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn generate(config: &SynthConfig) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let person = |i: usize| format!("person_{i}");
    let city = |i: usize| format!("city_{i}");
    let country = |i: usize| format!("country_{i}");
    let language = |i: usize| format!("language_{i}");
    let company = |i: usize| format!("company_{i}");

    let mut base = Vec::new();
    let mut derived = Vec::new();

    let city_country: Vec<usize> = (0..config.cities).map(|c| c % config.countries).collect();
    let country_language: Vec<usize> = (0..config.countries).map(|k| k % config.languages).collect();
    let company_city: Vec<usize> = (0..config.companies).map(|_| rng.gen_range(0..config.cities)).collect();

    for c in 0..config.cities {
        base.push(RawTriple::new(&city(c), "located_in", &country(city_country[c])));
    }
    for k in 0..config.countries {
        base.push(RawTriple::new(&country(k), "official_language", &language(country_language[k])));
    }
    for (c, &home) in company_city.iter().enumerate() {
        base.push(RawTriple::new(&company(c), "based_in", &city(home)));
    }

    let home: Vec<usize> = (0..config.people).map(|_| rng.gen_range(0..config.cities)).collect();
    let mut residents = vec![Vec::new(); config.cities];
    for (p, &c) in home.iter().enumerate() {
        residents[c].push(p);
    }
    for p in 0..config.people {
        let c = home[p];
        base.push(RawTriple::new(&person(p), "lives_in", &city(c)));
        let local: Vec<usize> = (0..config.companies).filter(|&k| company_city[k] == c).collect();
        let employer = match local.choose(&mut rng) {
            Some(&k) => k,
            None => rng.gen_range(0..config.companies),
        };
        base.push(RawTriple::new(&person(p), "works_for", &company(employer)));
        for _ in 0..config.friends {
            let friend = if rng.gen_bool(0.8) && residents[c].len() > 1 {
                *residents[c].choose(&mut rng).unwrap()
            } else {
                rng.gen_range(0..config.people)
            };
            if friend != p {
                base.push(RawTriple::new(&person(p), "friend_of", &person(friend)));
            }
        }
        let mut k = city_country[c];
        let mut l = country_language[k];
        if rng.gen_bool(config.noise) {
            k = rng.gen_range(0..config.countries);
        }
        if rng.gen_bool(config.noise) {
            l = rng.gen_range(0..config.languages);
        }
        derived.push(RawTriple::new(&person(p), "citizen_of", &country(k)));
        derived.push(RawTriple::new(&person(p), "speaks", &language(l)));
    }

    derived.shuffle(&mut rng);
    let held = ((derived.len() as f64) * config.holdout).round() as usize;
    let test = derived.split_off(derived.len() - held);
    let valid = derived.split_off(derived.len() - held);
    let mut train = base;
    train.extend(derived);
    train.shuffle(&mut rng);
    SynthDataset { train, valid, test }
}

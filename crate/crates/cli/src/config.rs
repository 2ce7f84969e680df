//! `key = value` run configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ucmf::evaluation::{ExperimentConfig, SweepParameter, SweepSpec};
use ucmf::seed::fnv1a;

/// Everything a command needs besides its subcommand-specific flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ratings: Option<PathBuf>,
    pub movies: Option<PathBuf>,
    pub out: PathBuf,
    pub experiment: ExperimentConfig,
    /// Training fraction used by sweeps.
    pub sweep_fraction: f64,
    pub alpha_grid: Vec<f64>,
    pub k_grid: Vec<f64>,
    /// Worker threads; 0 means one per core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ratings: None,
            movies: None,
            out: PathBuf::from("ucmf-out"),
            experiment: ExperimentConfig::default(),
            sweep_fraction: 0.9,
            alpha_grid: SweepParameter::Alpha.default_grid(),
            k_grid: SweepParameter::K.default_grid(),
            threads: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "ratings",
    "movies",
    "out",
    "fractions",
    "runs",
    "seed",
    "factors",
    "lambda1",
    "lambda2",
    "alpha",
    "eta",
    "epochs",
    "init_scale",
    "k",
    "theta0",
    "max_iterations",
    "sweep_fraction",
    "alpha_grid",
    "k_grid",
    "threads",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|v| number::<f64>(key, v.trim()))
        .collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key. Relative paths are taken relative to `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), String> {
        let path = |v: &str| match base {
            Some(dir) if Path::new(v).is_relative() => dir.join(v),
            _ => PathBuf::from(v),
        };
        let e = &mut self.experiment;
        match key {
            "ratings" => self.ratings = Some(path(value)),
            "movies" => self.movies = Some(path(value)),
            "out" => self.out = path(value),
            "fractions" => e.fractions = list(key, value)?,
            "runs" => e.runs = number(key, value)?,
            "seed" => e.base_seed = number(key, value)?,
            "factors" => e.training.factors = number(key, value)?,
            "lambda1" => e.training.lambda1 = number(key, value)?,
            "lambda2" => e.training.lambda2 = number(key, value)?,
            "alpha" => e.training.alpha = number(key, value)?,
            "eta" => e.training.eta = number(key, value)?,
            "epochs" => e.training.epochs = number(key, value)?,
            "init_scale" => e.training.init_scale = number(key, value)?,
            "k" => e.clustering.k = number(key, value)?,
            "theta0" => e.clustering.theta0 = number(key, value)?,
            "max_iterations" => e.clustering.max_iterations = number(key, value)?,
            "sweep_fraction" => self.sweep_fraction = number(key, value)?,
            "alpha_grid" => self.alpha_grid = list(key, value)?,
            "k_grid" => self.k_grid = list(key, value)?,
            "threads" => self.threads = number(key, value)?,
            _ => return Err(format!("unknown key `{key}` (known: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, source: &str, base: Option<&Path>) -> Result<(), String> {
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| format!("{source}:{}: {msg}", n + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(at(format!("`{key}` has no value")));
            }
            if seen.contains(&key) {
                return Err(at(format!("`{key}` set twice")));
            }
            seen.push(key);
            self.set(key, value, base).map_err(at)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        self.apply_text(&text, &path.display().to_string(), path.parent())
    }

    pub fn sweep_spec(&self, parameter: SweepParameter) -> SweepSpec {
        let values = match parameter {
            SweepParameter::Alpha => self.alpha_grid.clone(),
            SweepParameter::K => self.k_grid.clone(),
        };
        SweepSpec { parameter, values }
    }

    pub fn validate(&self, need_data: bool) -> Result<(), String> {
        self.experiment.validate().map_err(|e| e.to_string())?;
        if !(self.sweep_fraction > 0.0 && self.sweep_fraction < 1.0) {
            return Err(format!("sweep_fraction must lie in (0, 1), got {}", self.sweep_fraction));
        }
        for p in [SweepParameter::Alpha, SweepParameter::K] {
            self.sweep_spec(p).validate().map_err(|e| format!("{p}_grid: {e}"))?;
        }
        if need_data {
            for (name, path) in [("ratings", &self.ratings), ("movies", &self.movies)] {
                match path {
                    None => return Err(format!("no {name} file given (use --{name} or `{name} =` in the config)")),
                    Some(p) if !p.is_file() => return Err(format!("{name} file {} does not exist", p.display())),
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Canonical text of every setting that influences results.
    pub fn resolved(&self) -> String {
        let e = &self.experiment;
        let t = &e.training;
        let c = &e.clustering;
        let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("ratings", show(&self.ratings));
        put("movies", show(&self.movies));
        put("fractions", join(&e.fractions));
        put("runs", e.runs.to_string());
        put("seed", e.base_seed.to_string());
        put("factors", t.factors.to_string());
        put("lambda1", t.lambda1.to_string());
        put("lambda2", t.lambda2.to_string());
        put("alpha", t.alpha.to_string());
        put("eta", t.eta.to_string());
        put("epochs", t.epochs.to_string());
        put("init_scale", t.init_scale.to_string());
        put("k", c.k.to_string());
        put("theta0", c.theta0.to_string());
        put("max_iterations", c.max_iterations.to_string());
        put("sweep_fraction", self.sweep_fraction.to_string());
        put("alpha_grid", join(&self.alpha_grid));
        put("k_grid", join(&self.k_grid));
        s
    }

    /// Output directory `<out>/<label>-<hash of the resolved config>`.
    pub fn output_dir(&self, label: &str) -> PathBuf {
        let hash = fnv1a(format!("{label}\n{}", self.resolved()).as_bytes());
        self.out.join(format!("{label}-{:08x}", hash as u32 ^ (hash >> 32) as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let mut c = RunConfig::default();
        c.apply_text("# header\nruns = 3  # trailing\n\nfractions = 0.9, 0.5\nalpha=0.1\n", "t", None)
            .unwrap();
        assert_eq!(c.experiment.runs, 3);
        assert_eq!(c.experiment.fractions, vec![0.9, 0.5]);
        assert_eq!(c.experiment.training.alpha, 0.1);
    }

    #[test]
    fn reports_bad_lines() {
        let mut c = RunConfig::default();
        let err = c.apply_text("runs = 2\nruns 3\n", "cfg", None).unwrap_err();
        assert!(err.starts_with("cfg:2:"), "{err}");
        assert!(c.apply_text("colour = red", "cfg", None).unwrap_err().contains("unknown key"));
        assert!(c.apply_text("runs = many", "cfg", None).is_err());
        assert!(c.apply_text("runs =", "cfg", None).is_err());
        assert!(RunConfig::default().apply_text("k = 2\nk = 3", "cfg", None).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = RunConfig::default();
        c.apply_text("ratings = data/r.dat\nmovies = /abs/m.dat", "cfg", Some(Path::new("/etc/ucmf")))
            .unwrap();
        assert_eq!(c.ratings.unwrap(), PathBuf::from("/etc/ucmf/data/r.dat"));
        assert_eq!(c.movies.unwrap(), PathBuf::from("/abs/m.dat"));
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut c = RunConfig::default();
        c.set("alpha", "0.0003", None).unwrap();
        c.set("fractions", "0.9,0.75", None).unwrap();
        let mut again = RunConfig::default();
        again.apply_text(&c.resolved().replace("ratings = \n", "").replace("movies = \n", ""), "r", None)
            .unwrap();
        assert_eq!(again, c);
    }

    proptest::proptest! {
        #[test]
        fn resolved_text_round_trips_any_values(
            alpha in 0.0f64..10.0,
            eta in 1e-6f64..1.0,
            runs in 1usize..100,
            seed in proptest::prelude::any::<u64>(),
            fractions in proptest::collection::vec(0.01f64..0.99, 1..4),
        ) {
            let mut c = RunConfig::default();
            c.experiment.training.alpha = alpha;
            c.experiment.training.eta = eta;
            c.experiment.runs = runs;
            c.experiment.base_seed = seed;
            c.experiment.fractions = fractions;
            let text = c.resolved().replace("ratings = \n", "").replace("movies = \n", "");
            let mut again = RunConfig::default();
            again.apply_text(&text, "r", None).unwrap();
            proptest::prop_assert_eq!(again, c);
        }
    }

    #[test]
    fn output_dir_tracks_results_not_threads() {
        let a = RunConfig::default();
        let b = RunConfig { threads: 7, ..a.clone() };
        assert_eq!(a.output_dir("evaluate"), b.output_dir("evaluate"));
        let mut c = a.clone();
        c.set("epochs", "3", None).unwrap();
        assert_ne!(a.output_dir("evaluate"), c.output_dir("evaluate"));
        assert_ne!(a.output_dir("evaluate"), a.output_dir("sweep-alpha"));
    }

    #[test]
    fn every_key_is_settable() {
        let sample = |k: &str| match k {
            "fractions" | "alpha_grid" => "0.5",
            "k_grid" => "2",
            _ => "1",
        };
        for k in KEYS {
            RunConfig::default().set(k, sample(k), None).unwrap();
        }
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate(false).is_ok());
        assert!(RunConfig::default().validate(true).is_err());
        let mut c = RunConfig::default();
        c.set("runs", "0", None).unwrap();
        assert!(c.validate(false).is_err());
        let mut c = RunConfig::default();
        c.set("k_grid", "2,2.5", None).unwrap();
        assert!(c.validate(false).is_err());
    }
}

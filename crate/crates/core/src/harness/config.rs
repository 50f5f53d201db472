use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::joint_decoder::JointDecoderConfig;
use crate::{Error, Result};

/// Sweep parameters. Defaults follow the reference setup: S-D SNR from -5
/// to 9 dB, R-D SNR 20 dB, 1 local + 7 global iterations, a 900-bit
/// (2,3)-regular code on each link.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub snr_sd_list: Vec<f64>,
    pub snr_rd: f64,
    pub rho_list: Vec<f64>,
    pub global_iters: usize,
    pub local_iters: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub kappa: f64,
    pub code_n: usize,
    pub code_dv: usize,
    pub code_dc: usize,
    pub sd_code_seed: u64,
    pub rd_code_seed: u64,
    pub warm_start: bool,
    pub estimate_rho: bool,
    pub subtract_semantic_apriori: bool,
    pub images: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            snr_sd_list: (-5..=9).map(f64::from).collect(),
            snr_rd: 20.0,
            rho_list: vec![0.0, 0.1, 0.35],
            global_iters: 7,
            local_iters: 1,
            trials: 20,
            master_seed: 42,
            kappa: 2.0,
            code_n: 900,
            code_dv: 2,
            code_dc: 3,
            sd_code_seed: 1,
            rd_code_seed: 2,
            warm_start: true,
            estimate_rho: false,
            subtract_semantic_apriori: false,
            images: None,
            model: None,
            out: None,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_sd_list.is_empty() || self.rho_list.is_empty() {
            return Err(Error::Config("SNR and rho lists must be non-empty".into()));
        }
        if let Some(r) = self.rho_list.iter().find(|r| !(0.0..=0.5).contains(*r)) {
            return Err(Error::Config(format!("rho {r} outside [0, 0.5]")));
        }
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return Err(Error::Config(format!("kappa must be a nonnegative real, got {}", self.kappa)));
        }
        if self.local_iters == 0 {
            return Err(Error::Config("local_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn decoder_config(&self) -> JointDecoderConfig {
        JointDecoderConfig {
            global_iters: self.global_iters,
            local_iters: self.local_iters,
            kappa: self.kappa,
            warm_start: self.warm_start,
            estimate_rho: self.estimate_rho,
            subtract_semantic_apriori: self.subtract_semantic_apriori,
        }
    }

    /// LDPC iterations of the independent baseline: as many as the joint loop runs.
    pub fn independent_iters(&self) -> usize {
        (self.global_iters + 1) * self.local_iters
    }

    /// Applies the keys present in a config file on top of `self`.
    pub fn apply_file(&mut self, file: &ConfigFile) -> Result<()> {
        if let Some(v) = &file.snr_sd {
            self.snr_sd_list = v.values()?;
        }
        if let Some(v) = &file.rho {
            self.rho_list = v.values()?;
        }
        macro_rules! copy {
            ($($src:ident => $dst:ident),* $(,)?) => {
                $(if let Some(v) = &file.$src { self.$dst = v.clone(); })*
            };
        }
        copy!(
            snr_rd => snr_rd, global_iters => global_iters, local_iters => local_iters,
            trials => trials, seed => master_seed, kappa => kappa, code_n => code_n,
            code_dv => code_dv, code_dc => code_dc, sd_code_seed => sd_code_seed,
            rd_code_seed => rd_code_seed, warm_start => warm_start, estimate_rho => estimate_rho,
            subtract_semantic_apriori => subtract_semantic_apriori,
        );
        if let Some(v) = &file.images {
            self.images = Some(v.clone());
        }
        if let Some(v) = &file.model {
            self.model = Some(v.clone());
        }
        if let Some(v) = &file.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = file.threads {
            self.threads = Some(v);
        }
        Ok(())
    }
}

/// A list given either as `"start:stop:step"` / `"a,b,c"` text or as an array.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ListSpec {
    Text(String),
    Values(Vec<f64>),
}

impl ListSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            ListSpec::Text(s) => parse_list(s),
            ListSpec::Values(v) => Ok(v.clone()),
        }
    }
}

/// Config file contents; every key mirrors a command-line flag.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub snr_sd: Option<ListSpec>,
    pub snr_rd: Option<f64>,
    pub rho: Option<ListSpec>,
    pub global_iters: Option<usize>,
    pub local_iters: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub kappa: Option<f64>,
    pub code_n: Option<usize>,
    pub code_dv: Option<usize>,
    pub code_dc: Option<usize>,
    pub sd_code_seed: Option<u64>,
    pub rd_code_seed: Option<u64>,
    pub warm_start: Option<bool>,
    pub estimate_rho: Option<bool>,
    pub subtract_semantic_apriori: Option<bool>,
    pub images: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Parses `"start:stop:step"` (inclusive) or a comma-separated list.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("not a number: {s:?} in {spec:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        [single] => single.split(',').filter(|s| !s.trim().is_empty()).map(num).collect(),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step <= 0.0 || b < a {
                return Err(Error::Config(format!("bad range {spec:?}")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + step * i as f64).collect())
        }
        _ => Err(Error::Config(format!("cannot parse list {spec:?}"))),
    }
}

//! Deterministic synthetic dataset generator with planted structure.
//!
//! Two presets cover the verification needs of the whole pipeline:
//!
//! * `clustered` — items are partitioned into clusters, each cluster owns
//!   one brand and one leaf category; sessions draw from a home cluster
//!   with an occasional cross-cluster noise draw. Validates embedding
//!   geometry and the "less wrong" logic.
//! * `zipf` — item draws follow a Zipf popularity law over the same item
//!   inventory. Validates popularity strata and bias metrics.
//!
//! The manifest records the planted assignments so tests can check results
//! against the known ground truth. Output is byte-identical for a fixed
//! spec.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    write_catalog_jsonl, write_interactions_jsonl, Catalog, EventType, Interaction, ItemId,
    ItemMeta,
};
use crate::error::{RecError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Clustered,
    Zipf,
}

/// Generator parameters. Items always number `n_clusters * items_per_cluster`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynSpec {
    pub preset: Preset,
    pub n_clusters: usize,
    pub items_per_cluster: usize,
    pub n_sessions: usize,
    /// Inclusive (min, max) session length.
    pub session_len: (usize, usize),
    /// Probability that any given clustered draw leaves the home cluster.
    pub cross_cluster_noise: f64,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynSpec {
    fn default() -> Self {
        SynSpec {
            preset: Preset::Clustered,
            n_clusters: 5,
            items_per_cluster: 20,
            n_sessions: 2000,
            session_len: (3, 8),
            cross_cluster_noise: 0.05,
            zipf_exponent: 1.1,
            seed: 42,
        }
    }
}

impl SynSpec {
    pub fn n_items(&self) -> usize {
        self.n_clusters * self.items_per_cluster
    }

    fn validate(&self) -> Result<()> {
        let (min_len, max_len) = self.session_len;
        if self.n_clusters == 0 || self.items_per_cluster == 0 || self.n_sessions == 0 {
            return Err(RecError::Config("counts must be positive".into()));
        }
        if min_len == 0 || min_len > max_len {
            return Err(RecError::Config(format!(
                "invalid session length range ({min_len}, {max_len})"
            )));
        }
        if !(0.0..1.0).contains(&self.cross_cluster_noise) {
            return Err(RecError::Config(format!(
                "cross_cluster_noise must lie in [0, 1), got {}",
                self.cross_cluster_noise
            )));
        }
        if max_len > self.n_items() {
            return Err(RecError::Config(format!(
                "session length {} exceeds the {} available items",
                max_len,
                self.n_items()
            )));
        }
        if self.preset == Preset::Clustered
            && self.cross_cluster_noise == 0.0
            && max_len > self.items_per_cluster
        {
            return Err(RecError::Config(format!(
                "session length {} exceeds cluster size {} with zero noise",
                max_len, self.items_per_cluster
            )));
        }
        if self.preset == Preset::Zipf && self.zipf_exponent <= 0.0 {
            return Err(RecError::Config(format!(
                "zipf_exponent must be positive, got {}",
                self.zipf_exponent
            )));
        }
        Ok(())
    }
}

/// Planted per-item assignments, for oracle checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub cluster: usize,
    pub brand: String,
    pub category_path: String,
    pub price: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub items: BTreeMap<ItemId, ManifestEntry>,
}

impl Manifest {
    pub fn cluster_of(&self, item: &str) -> Option<usize> {
        self.items.get(item).map(|e| e.cluster)
    }
}

/// An in-memory generated dataset plus its manifest.
#[derive(Clone, Debug)]
pub struct SynData {
    pub interactions: Vec<Interaction>,
    pub catalog: Catalog,
    pub manifest: Manifest,
}

/// Paths written by [`write_files`].
#[derive(Clone, Debug)]
pub struct SynPaths {
    pub interactions: PathBuf,
    pub catalog: PathBuf,
    pub manifest: PathBuf,
}

fn item_id(cluster: usize, idx: usize) -> ItemId {
    format!("c{cluster:02}_i{idx:03}")
}

/// Generates interactions, catalog and manifest for the spec.
pub fn generate(spec: &SynSpec) -> Result<SynData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_items = spec.n_items();

    // Catalog and manifest: cluster-major item order, prices drawn log
    // uniform in [10, 1000] in that same order.
    let mut rows = Vec::with_capacity(n_items);
    let mut manifest = Manifest::default();
    for cluster in 0..spec.n_clusters {
        let brand = format!("brand{cluster:02}");
        let category = format!("shop>cat{cluster:02}");
        for idx in 0..spec.items_per_cluster {
            let id = item_id(cluster, idx);
            let u: f64 = rng.random();
            let price = (10f64.ln() + u * (1000f64.ln() - 10f64.ln())).exp();
            rows.push(ItemMeta {
                item_id: id.clone(),
                price: Some(price),
                brand: Some(brand.clone()),
                category_path: Some(category.split('>').map(str::to_string).collect()),
                extra: BTreeMap::new(),
            });
            manifest.items.insert(
                id,
                ManifestEntry {
                    cluster,
                    brand: brand.clone(),
                    category_path: category.clone(),
                    price,
                },
            );
        }
    }
    let catalog = Catalog::from_rows(rows)?;

    // Global item index -> id; ids are ordered cluster-major so index / i
    // items_per_cluster recovers the cluster.
    let ids: Vec<ItemId> = (0..spec.n_clusters)
        .flat_map(|c| (0..spec.items_per_cluster).map(move |i| item_id(c, i)))
        .collect();

    let zipf = match spec.preset {
        Preset::Zipf => Some(
            Zipf::new(n_items as f64, spec.zipf_exponent)
                .map_err(|e| RecError::Config(format!("zipf: {e}")))?,
        ),
        Preset::Clustered => None,
    };

    let (min_len, max_len) = spec.session_len;
    let mut interactions = Vec::new();
    let base_ts: i64 = 1_600_000_000_000;

    for s in 0..spec.n_sessions {
        let len = rng.random_range(min_len..=max_len);
        let start_ts = base_ts + (s as i64) * 60_000;
        match spec.preset {
            Preset::Zipf => {
                // Independent Zipf draws; repeats within a session allowed.
                let dist = zipf.as_ref().unwrap();
                for slot in 0..len {
                    let rank = dist.sample(&mut rng) as usize;
                    interactions.push(Interaction {
                        session_id: format!("s{s:05}"),
                        item_id: ids[rank - 1].clone(),
                        timestamp: start_ts + slot as i64 * 1_000,
                        event_type: EventType::View,
                    });
                }
            }
            Preset::Clustered => {
                let home = rng.random_range(0..spec.n_clusters);
                let mut used: HashSet<usize> = HashSet::with_capacity(len);
                for slot in 0..len {
                    let cluster = if spec.n_clusters > 1
                        && rng.random::<f64>() < spec.cross_cluster_noise
                    {
                        let mut c = rng.random_range(0..spec.n_clusters - 1);
                        if c >= home {
                            c += 1;
                        }
                        c
                    } else {
                        home
                    };
                    let picked = pick_unused(&mut rng, spec, cluster, &used, n_items);
                    used.insert(picked);
                    interactions.push(Interaction {
                        session_id: format!("s{s:05}"),
                        item_id: ids[picked].clone(),
                        timestamp: start_ts + slot as i64 * 1_000,
                        event_type: EventType::View,
                    });
                }
            }
        }
    }

    Ok(SynData {
        interactions,
        catalog,
        manifest,
    })
}

/// Draws an unused item from the cluster, with a deterministic in-order
/// fallback when random probing keeps colliding (and a global fallback when
/// the cluster itself is exhausted by noise draws).
fn pick_unused(
    rng: &mut ChaCha8Rng,
    spec: &SynSpec,
    cluster: usize,
    used: &HashSet<usize>,
    n_items: usize,
) -> usize {
    let cluster_base = cluster * spec.items_per_cluster;
    for _ in 0..32 {
        let candidate = cluster_base + rng.random_range(0..spec.items_per_cluster);
        if !used.contains(&candidate) {
            return candidate;
        }
    }
    for offset in 0..spec.items_per_cluster {
        let candidate = cluster_base + offset;
        if !used.contains(&candidate) {
            return candidate;
        }
    }
    // Cluster exhausted; validated session lengths guarantee a free item
    // exists somewhere.
    (0..n_items).find(|i| !used.contains(i)).expect("spec validated")
}

/// Writes `interactions.jsonl`, `catalog.jsonl` and `manifest.json` into
/// `dir`, creating it if needed. Byte-identical for identical specs.
pub fn write_files(data: &SynData, dir: &Path) -> Result<SynPaths> {
    std::fs::create_dir_all(dir).map_err(|e| RecError::io(dir, e))?;
    let paths = SynPaths {
        interactions: dir.join("interactions.jsonl"),
        catalog: dir.join("catalog.jsonl"),
        manifest: dir.join("manifest.json"),
    };

    let file = File::create(&paths.interactions).map_err(|e| RecError::io(&paths.interactions, e))?;
    write_interactions_jsonl(&data.interactions, BufWriter::new(file))?;

    let file = File::create(&paths.catalog).map_err(|e| RecError::io(&paths.catalog, e))?;
    write_catalog_jsonl(data.catalog.items(), BufWriter::new(file))?;

    let file = File::create(&paths.manifest).map_err(|e| RecError::io(&paths.manifest, e))?;
    let mut writer = BufWriter::new(file);
    let json = serde_json::to_string_pretty(&data.manifest)
        .map_err(|e| RecError::Data(format!("serialize manifest: {e}")))?;
    writer
        .write_all(json.as_bytes())
        .and_then(|_| writer.write_all(b"\n"))
        .map_err(|e| RecError::io(&paths.manifest, e))?;
    Ok(paths)
}

//! Shared resources: descriptors, per-category groups and the pool a run draws from.

use std::collections::BTreeMap;

use serde::Serialize;

/// One shared resource and its qualities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceDescriptor {
    /// 1-based, in declaration order across the whole `Resources:` section.
    pub id: u32,
    pub category: String,
    /// Power for machines, experience for humans.
    pub efficiency: i64,
    pub cost_per_unit: i64,
    /// Fourth quality (e.g. capacity). Stored, never interpreted.
    pub extra_quality: i64,
    pub available: bool,
}

/// Resources of one category, listed together in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceGroup {
    pub descriptors: Vec<ResourceDescriptor>,
}

impl ResourceGroup {
    pub fn category(&self) -> &str {
        self.descriptors.first().map(|d| d.category.as_str()).unwrap_or("")
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResourcePool {
    pub resources: Vec<ResourceDescriptor>,
}

impl ResourcePool {
    pub fn from_groups(groups: &[ResourceGroup]) -> Self {
        Self {
            resources: groups.iter().flat_map(|g| g.descriptors.iter().cloned()).collect(),
        }
    }

    /// Categories in order of first declaration.
    pub fn categories(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.resources {
            if !out.iter().any(|c| c == &r.category) {
                out.push(r.category.clone());
            }
        }
        out
    }

    pub fn declared_count(&self, category: &str) -> usize {
        self.resources.iter().filter(|r| r.category == category).count()
    }

    pub fn available_count(&self, category: &str) -> usize {
        self.resources
            .iter()
            .filter(|r| r.category == category && r.available)
            .count()
    }

    pub fn available_by_category(&self) -> BTreeMap<String, usize> {
        self.categories()
            .into_iter()
            .map(|c| {
                let n = self.available_count(&c);
                (c, n)
            })
            .collect()
    }
}

/// Marks exactly `floor(n * pct / 100)` resources of each category as available,
/// choosing the lowest ids; the rest become unavailable for the whole run.
pub fn apply_availability(pool: &ResourcePool, availability_pct: u32) -> ResourcePool {
    let pct = availability_pct.min(100) as usize;
    let mut out = pool.clone();
    for category in pool.categories() {
        let n = pool.declared_count(&category);
        let keep = n * pct / 100;
        let mut ids: Vec<u32> = pool
            .resources
            .iter()
            .filter(|r| r.category == category)
            .map(|r| r.id)
            .collect();
        ids.sort_unstable();
        let kept = &ids[..keep];
        for r in out.resources.iter_mut().filter(|r| r.category == category) {
            r.available = kept.contains(&r.id);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(category: &str, first_id: u32, n: u32) -> ResourceGroup {
        ResourceGroup {
            descriptors: (0..n)
                .map(|i| ResourceDescriptor {
                    id: first_id + i,
                    category: category.into(),
                    efficiency: 1500,
                    cost_per_unit: 5000,
                    extra_quality: 1,
                    available: true,
                })
                .collect(),
        }
    }

    fn supply_pool() -> ResourcePool {
        ResourcePool::from_groups(&[group("Van", 1, 8), group("Driver", 9, 8), group("Helper", 17, 4)])
    }

    #[test]
    fn half_of_eight_vans() {
        let pool = apply_availability(&supply_pool(), 50);
        let vans: Vec<_> = pool.resources.iter().filter(|r| r.category == "Van").collect();
        assert_eq!(vans.iter().filter(|r| r.available).count(), 4);
        assert!(vans.iter().filter(|r| r.available).all(|r| r.id <= 4));
        assert!(vans.iter().filter(|r| !r.available).all(|r| r.id > 4));
    }

    #[test]
    fn full_availability_is_identity() {
        let pool = supply_pool();
        assert_eq!(apply_availability(&pool, 100), pool);
    }

    #[test]
    fn zero_availability_empties_helpers() {
        let pool = apply_availability(&supply_pool(), 0);
        assert_eq!(pool.available_count("Helper"), 0);
    }

    proptest::proptest! {
        #[test]
        fn available_count_follows_floor_rule(pct in 0u32..=100, vans in 1u32..12, helpers in 1u32..6) {
            let pool = ResourcePool::from_groups(&[group("Van", 1, vans), group("Helper", vans + 1, helpers)]);
            let reduced = apply_availability(&pool, pct);
            proptest::prop_assert_eq!(reduced.available_count("Van"), (vans * pct / 100) as usize);
            proptest::prop_assert_eq!(reduced.available_count("Helper"), (helpers * pct / 100) as usize);
        }
    }
}

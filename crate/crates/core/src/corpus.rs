//! Example models shipped with the library.

pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub const SUPPLY: &str = include_str!("../corpus/supply.rpl");
pub const SUPPLY_RESTOCK: &str = include_str!("../corpus/supply_restock.rpl");
pub const MINIMAL: &str = include_str!("../corpus/minimal.rpl");
pub const PARALLEL_HOLDS: &str = include_str!("../corpus/parallel_holds.rpl");
pub const CHAINED_HOLDS: &str = include_str!("../corpus/chained_holds.rpl");

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "supply.rpl",
        description: "Retailer, warehouse, cargo and supplier sharing vans, drivers and helpers",
        source: SUPPLY,
    },
    Example {
        name: "supply_restock.rpl",
        description: "Supply chain where the warehouse never has stock, forcing a supplier order",
        source: SUPPLY_RESTOCK,
    },
    Example {
        name: "minimal.rpl",
        description: "Empty model",
        source: MINIMAL,
    },
    Example {
        name: "parallel_holds.rpl",
        description: "Two unordered trips each holding one van",
        source: PARALLEL_HOLDS,
    },
    Example {
        name: "chained_holds.rpl",
        description: "Two trips ordered by an `after` dependency",
        source: CHAINED_HOLDS,
    },
];

pub fn example(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

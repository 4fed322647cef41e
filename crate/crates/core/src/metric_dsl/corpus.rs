//! The metric corpus shipped with the crate, embedded at build time.

pub const MINKOWSKI: &str = include_str!("../../corpus/minkowski.json");
pub const SCHWARZSCHILD: &str = include_str!("../../corpus/schwarzschild.json");
pub const KASNER: &str = include_str!("../../corpus/kasner.json");
pub const FLAT_FLRW: &str = include_str!("../../corpus/flat_flrw.json");
pub const DE_SITTER_LIKE: &str = include_str!("../../corpus/de_sitter_like.json");
pub const NON_SOLUTION: &str = include_str!("../../corpus/non_solution.json");
pub const EM_CONSTANT_FIELD: &str = include_str!("../../corpus/em_constant_field.json");
pub const CHARGED_MASS: &str = include_str!("../../corpus/charged_mass.json");

pub const ALL: [(&str, &str); 8] = [
    ("minkowski", MINKOWSKI),
    ("schwarzschild", SCHWARZSCHILD),
    ("kasner", KASNER),
    ("flat_flrw", FLAT_FLRW),
    ("de_sitter_like", DE_SITTER_LIKE),
    ("non_solution", NON_SOLUTION),
    ("em_constant_field", EM_CONSTANT_FIELD),
    ("charged_mass", CHARGED_MASS),
];

/// Look up a corpus member by name.
pub fn builtin(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

//! Configurations shipped with the binary (`--preset NAME`).

const PRESETS: [(&str, &str); 9] = [
    ("fig2_cut", include_str!("../presets/fig2_cut.json")),
    ("fig2b_points", include_str!("../presets/fig2b_points.json")),
    ("fig3_hamming", include_str!("../presets/fig3_hamming.json")),
    ("fig4_2d_cut", include_str!("../presets/fig4_2d_cut.json")),
    ("supp_disorder", include_str!("../presets/supp_disorder.json")),
    ("supp_classical", include_str!("../presets/supp_classical.json")),
    ("numerics_1d", include_str!("../presets/numerics_1d.json")),
    ("experimental_grid", include_str!("../presets/experimental_grid.json")),
    ("smoke", include_str!("../presets/smoke.json")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

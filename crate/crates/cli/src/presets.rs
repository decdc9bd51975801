//! Built-in scenarios, one per reproduced figure, stored as config text.

macro_rules! virus_3d {
    ($b:literal) => {
        concat!(
            "lambda = 0.36\nK = 1\nbeta = 0.11\ngamma = 1\nb = ",
            $b,
            "\ndelta = 0.44\nbeta_y = 0\nbeta_v = 0\nbeta_z = 1\nc = 1\nepsilon = 0\n"
        )
    };
}

macro_rules! linear {
    ($b:literal) => {
        concat!(
            "lambda = 0.36\nK = 1\nbeta = 0.11\ngamma = 1\nb = ",
            $b,
            "\ndelta = 0.2\nbeta_y = 0.48\nbeta_v = 0.16\nbeta_z = 0.6\nc = 0.036\nepsilon = 0\n"
        )
    };
}

macro_rules! quadratic {
    ($b:literal) => {
        concat!(
            "lambda = 1\nK = 1\nbeta = 43.5\ngamma = 0.0078125\nb = ",
            $b,
            "\ndelta = 0.5\nbeta_y = 1\nbeta_v = 1\nbeta_z = 1\nc = 1\nepsilon = 1\n"
        )
    };
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig-bif11T",
        description: "virus-only model, equilibrium branches in b",
        config: concat!("figure = bif11T\nanalysis = sweep\nparam = b\ngrid = 1.5:40:400\n", virus_3d!("5")),
    },
    Preset {
        name: "fig-fig5T",
        description: "virus-only model at b = 28, orbit near the unstable E*",
        config: concat!(
            "figure = fig5T\nanalysis = integrate\ninit = 0.15, 0.044, 2.65, 0\nt_end = 2000\ndt = 0.5\n",
            virus_3d!("28")
        ),
    },
    Preset {
        name: "fig-cy113D",
        description: "virus-only model at b = 28, two orbits and the attracting cycle",
        config: concat!(
            "figure = cy113D\nanalysis = cycle\ninit = 0.9, 0.01, 0.5, 0; 0.15, 0.044, 2.65, 0\nt_end = 20000\ndt = 1\n",
            virus_3d!("28")
        ),
    },
    Preset {
        name: "fig-BiifT17",
        description: "linear clearance, equilibrium branches in b",
        config: concat!("figure = BiifT17\nanalysis = sweep\nparam = b\ngrid = 1.5:25:400\n", linear!("5")),
    },
    Preset {
        name: "fig-Bifx",
        description: "linear clearance, branches in b with the v >= 0 boundary",
        config: concat!("figure = Bifx\nanalysis = sweep\nparam = b\ngrid = 1.5:30:400\n", linear!("5")),
    },
    Preset {
        name: "fig-map4",
        description: "linear clearance, attractor regions of the (b, beta) plane",
        config: concat!(
            "figure = map4\nanalysis = region_map\nb_range = 1.5:30\nbeta_range = 0.02:0.3\nresolution = 200,200\n",
            linear!("5")
        ),
    },
    Preset {
        name: "fig-P22",
        description: "linear clearance at b = 9.5, convergence to E* and to E_im",
        config: concat!(
            "figure = P22\nanalysis = integrate\ninit = 0.9, 0.01, 1.2, 0; 0.5, 0.01, 1.2, 0.5\nt_end = 1900\ndt = 0.5\n",
            linear!("9.5")
        ),
    },
    Preset {
        name: "fig-PHI",
        description: "linear clearance at b = 23, orbits and the limit cycle",
        config: concat!(
            "figure = PHI\nanalysis = cycle\ninit = 0.25, 0.05, 1, 0.5; 0.3, 0.05, 1, 0.5; 0.9, 0.05, 1, 0.5\nt_end = 3000\ndt = 0.5\n",
            linear!("23")
        ),
    },
    Preset {
        name: "fig-EriB",
        description: "quadratic clearance, equilibrium branches in b",
        config: concat!("figure = EriB\nanalysis = sweep\nparam = b\ngrid = 1.001:60:400\n", quadratic!("27")),
    },
    Preset {
        name: "fig-Bif1x",
        description: "quadratic clearance, branches in b with the y bound",
        config: concat!("figure = Bif1x\nanalysis = sweep\nparam = b\ngrid = 1.001:60:400\n", quadratic!("27")),
    },
    Preset {
        name: "fig-LC-diag",
        description: "quadratic clearance, cycle branch born at the Hopf point of E_im",
        config: concat!(
            "figure = LC-diag\nanalysis = cycle_branch\nparam = b\nhopf_branch = E_im\nhopf_bracket = 29.5:30.5\nrange = 29:45\nmax_period = 300\nmax_points = 1500\nds_max = 0.5\n",
            quadratic!("29.9")
        ),
    },
    Preset {
        name: "fig-PG-01b",
        description: "quadratic clearance at b = 27, convergence to E_plus",
        config: concat!(
            "figure = PG-01b\nanalysis = integrate\ninit = 0.9, 0.01, 0.01, 0.01\nt_end = 400\ndt = 0.1\n",
            quadratic!("27")
        ),
    },
    Preset {
        name: "fig-PG-02",
        description: "quadratic clearance at b = 29.5, convergence to E_plus",
        config: concat!(
            "figure = PG-02\nanalysis = integrate\ninit = 0.9, 0.01, 0.01, 0.01\nt_end = 400\ndt = 0.1\n",
            quadratic!("29.5")
        ),
    },
    Preset {
        name: "fig-ppG-2LC",
        description: "quadratic clearance at b = 42, a stable cycle next to the stable E_plus",
        config: concat!(
            "figure = ppG-2LC\nanalysis = cycle\ninit = 0.9, 0.01, 0.01, 0.01; 0.05, 0.05, 0.0043, 0.1954\nt_end = 3000\ndt = 0.5\n",
            quadratic!("42")
        ),
    },
    Preset {
        name: "fig-PG-03",
        description: "quadratic clearance at b = 50, no stable attractor",
        config: concat!(
            "figure = PG-03\nanalysis = integrate\ninit = 0.9, 0.01, 0.01, 0.01\nt_end = 125\ndt = 0.1\nlyapunov_horizon = 2000\n",
            quadratic!("50")
        ),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    #[test]
    fn every_preset_parses_and_names_its_figure() {
        for p in PRESETS {
            let c = ScenarioConfig::parse(p.config).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(c.figure.as_deref(), p.name.strip_prefix("fig-"), "{}", p.name);
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
    }
}

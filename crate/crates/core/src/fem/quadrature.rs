//! Quadrature rules.

/// Barycentric point and weight (weights sum to 1).
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Seven-point rule, exact for polynomials of degree 5.
pub fn triangle_rule() -> &'static [TriPoint] {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const W1: f64 = 0.132_394_152_788_506_2;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W2: f64 = 0.125_939_180_544_827_2;
    static RULE: [TriPoint; 7] = [
        TriPoint {
            bary: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            weight: 0.225,
        },
        TriPoint {
            bary: [A1, B1, B1],
            weight: W1,
        },
        TriPoint {
            bary: [B1, A1, B1],
            weight: W1,
        },
        TriPoint {
            bary: [B1, B1, A1],
            weight: W1,
        },
        TriPoint {
            bary: [A2, B2, B2],
            weight: W2,
        },
        TriPoint {
            bary: [B2, A2, B2],
            weight: W2,
        },
        TriPoint {
            bary: [B2, B2, A2],
            weight: W2,
        },
    ];
    &RULE
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static G1: [(f64, f64); 1] = [(0.5, 1.0)];
    static G2: [(f64, f64); 2] = [
        (0.211_324_865_405_187_1, 0.5),
        (0.788_675_134_594_812_9, 0.5),
    ];
    static G3: [(f64, f64); 3] = [
        (0.112_701_665_379_258_3, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.887_298_334_620_741_7, 5.0 / 18.0),
    ];
    static G4: [(f64, f64); 4] = [
        (0.069_431_844_202_973_71, 0.173_927_422_568_726_9),
        (0.330_009_478_207_571_9, 0.326_072_577_431_273_1),
        (0.669_990_521_792_428_1, 0.326_072_577_431_273_1),
        (0.930_568_155_797_026_3, 0.173_927_422_568_726_9),
    ];
    static G5: [(f64, f64); 5] = [
        (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
        (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
        (0.5, 0.284_444_444_444_444_4),
        (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
        (0.953_089_922_969_332_0, 0.118_463_442_528_094_5),
    ];
    match n {
        1 => &G1,
        2 => &G2,
        3 => &G3,
        4 => &G4,
        _ => &G5,
    }
}

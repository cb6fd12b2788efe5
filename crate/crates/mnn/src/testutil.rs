//! Shared fixtures for unit tests.

use crate::lattice::{Bond, Network, Node};

/// Two collinear unit-stiffness bonds holding a free node between two
/// anchors, plus a vertical bond pinning the y motion. The classic
/// closed-form instance: under `F = (1, 0)` the free node moves `F/(k0+k1)`.
pub fn s1_pinned() -> Network {
    Network {
        nodes: vec![
            Node {
                id: 0,
                position: [0.0, 0.0],
                fixed: false,
            },
            Node {
                id: 1,
                position: [-1.0, 0.0],
                fixed: true,
            },
            Node {
                id: 2,
                position: [1.0, 0.0],
                fixed: true,
            },
            Node {
                id: 3,
                position: [0.0, -1.0],
                fixed: true,
            },
        ],
        bonds: vec![
            Bond {
                id: 0,
                i: 1,
                j: 0,
                k: 1.0,
                rest_length: 1.0,
            },
            Bond {
                id: 1,
                i: 0,
                j: 2,
                k: 1.0,
                rest_length: 1.0,
            },
            Bond {
                id: 2,
                i: 3,
                j: 0,
                k: 1.0,
                rest_length: 1.0,
            },
        ],
        k_bounds: (0.1, 10.0),
    }
}

/// The same instance without the vertical pin: the y motion of the free
/// node is a zero mode.
pub fn s1_floppy() -> Network {
    let mut net = s1_pinned();
    net.bonds.pop();
    net
}

/// One free hub node bonded to `m` anchors spread over a half circle:
/// a well-posed network with exactly `m` bonds for any `m ≥ 2`.
pub fn fan(m: usize) -> Network {
    let mut nodes = vec![Node {
        id: 0,
        position: [0.0, 0.0],
        fixed: false,
    }];
    let mut bonds = Vec::new();
    for b in 0..m {
        let angle = std::f64::consts::PI * (0.15 + 0.7 * b as f64 / m as f64);
        nodes.push(Node {
            id: b + 1,
            position: [angle.cos(), angle.sin()],
            fixed: true,
        });
        bonds.push(Bond {
            id: b,
            i: 0,
            j: b + 1,
            k: 1.0 + 0.01 * b as f64,
            rest_length: 1.0,
        });
    }
    Network {
        nodes,
        bonds,
        k_bounds: (0.1, 10.0),
    }
}

//! Legacy VTK (ASCII, `STRUCTURED_POINTS`) output of the extended state.

use std::fmt::Write;

use maxwell_elliptic::assembly::ExtendedState;
use maxwell_elliptic::geometry::Grid;
use maxwell_elliptic::Side;
use num_complex::Complex64;

/// Slot whose value represents `node`; interface nodes use the `Ω₊` value.
fn representative_slot(grid: &Grid, node: usize) -> usize {
    grid.slot(node, Side::Plus)
        .or_else(|| grid.slot(node, Side::Minus))
        .expect("every node has at least one slot")
}

/// Render `state` with real and imaginary parts of `E`, `H`, `α`, `β` as
/// separate point-data blocks.
pub fn render(grid: &Grid, state: &ExtendedState, title: &str) -> String {
    let n = grid.n + 1;
    let slots: Vec<usize> = (0..n)
        .flat_map(|k| (0..n).flat_map(move |j| (0..n).map(move |i| (i, j, k))))
        .map(|(i, j, k)| representative_slot(grid, grid.node(i, j, k)))
        .collect();
    let lo = grid.spec.outer.lo;
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "{}", title.replace('\n', " ")).unwrap();
    writeln!(out, "ASCII").unwrap();
    writeln!(out, "DATASET STRUCTURED_POINTS").unwrap();
    writeln!(out, "DIMENSIONS {n} {n} {n}").unwrap();
    writeln!(out, "ORIGIN {:.12e} {:.12e} {:.12e}", lo[0], lo[1], lo[2]).unwrap();
    writeln!(out, "SPACING {:.12e} {:.12e} {:.12e}", grid.h[0], grid.h[1], grid.h[2]).unwrap();
    writeln!(out, "POINT_DATA {}", slots.len()).unwrap();

    type Part = fn(Complex64) -> f64;
    let parts: [(&str, Part); 2] = [("re", |z| z.re), ("im", |z| z.im)];
    for (name, field) in [("E", &state.e), ("H", &state.h)] {
        for (suffix, part) in parts {
            writeln!(out, "VECTORS {name}_{suffix} double").unwrap();
            for &s in &slots {
                let v = field.values[s];
                writeln!(out, "{:.12e} {:.12e} {:.12e}", part(v[0]), part(v[1]), part(v[2])).unwrap();
            }
        }
    }
    for (name, field) in [("alpha", &state.alpha), ("beta", &state.beta)] {
        for (suffix, part) in parts {
            writeln!(out, "SCALARS {name}_{suffix} double 1").unwrap();
            writeln!(out, "LOOKUP_TABLE default").unwrap();
            for &s in &slots {
                writeln!(out, "{:.12e}", part(field.values[s])).unwrap();
            }
        }
    }
    out
}

use super::*;
use crate::mesh::primitives::{icosphere, radial_bump};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, h: usize, w: usize, coverage: f64) -> NormalMap {
    let mut m = NormalMap::empty(h, w);
    for at in 0..h * w {
        if rng.gen_bool(coverage) {
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.1..1.0),
            );
            m.set(at, v.normalize());
        }
    }
    m
}

/// Wavy 5×4 height field facing +z.
fn random_sheet(rng: &mut ChaCha8Rng) -> TriangleMesh {
    let mut verts = Vec::new();
    for j in 0..4 {
        for i in 0..5 {
            verts.push(Vec3::new(
                -1.0 + 0.5 * i as f64 + rng.gen_range(-0.1..0.1),
                -1.0 + 2.0 / 3.0 * j as f64 + rng.gen_range(-0.1..0.1),
                rng.gen_range(-0.3..0.3),
            ));
        }
    }
    let mut faces = Vec::new();
    for j in 0..3 {
        for i in 0..4 {
            let a = j * 5 + i;
            faces.push([a, a + 1, a + 6]);
            faces.push([a, a + 6, a + 5]);
        }
    }
    TriangleMesh::new(verts, faces).unwrap()
}

/// Normal loss evaluated directly from vertex positions with fixed faces.
fn frozen_loss(mesh: &TriangleMesh, buffers: &[FaceBuffer], targets: &[NormalMap], views: &[CameraPose]) -> f64 {
    let mut total = 0.0;
    for ((buf, t), cam) in buffers.iter().zip(targets).zip(views) {
        let rot = cam.rotation();
        let mut sum = 0.0;
        for r in 0..cam.height {
            for c in 0..cam.width {
                let pred = buf.face(r, c).map(|f| {
                    let [a, b, d] = mesh.face_positions(f);
                    (rot * (b - a).cross(&(d - a))).normalize()
                });
                let target = t.is_covered(r, c).then(|| t.normal(r, c));
                sum += match (pred, target) {
                    (Some(p), Some(q)) => (p - q).norm_squared(),
                    (Some(p), None) | (None, Some(p)) => p.norm_squared(),
                    (None, None) => 0.0,
                };
            }
        }
        total += sum / (cam.height * cam.width) as f64;
    }
    total
}

#[test]
fn loss_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_map(&mut rng, 6, 7, 0.7);
    assert_eq!(
        normal_loss(std::slice::from_ref(&a), std::slice::from_ref(&a))
            .unwrap()
            .0,
        0.0
    );

    let mut x = NormalMap::empty(4, 4);
    let mut y = NormalMap::empty(4, 4);
    for at in 0..10 {
        x.set(at, Vec3::x());
        y.set(at, Vec3::z());
    }
    let (loss, views) = normal_loss(&[x], &[y]).unwrap();
    assert!((loss - 2.0 * 10.0 / 16.0).abs() < 1e-15);
    assert_eq!(views[0].covered_pixels, 10);

    let b = random_map(&mut rng, 6, 8, 0.7);
    assert!(matches!(
        normal_loss(std::slice::from_ref(&a), &[b]),
        Err(Error::ShapeMismatch(_))
    ));
    assert!(matches!(
        normal_loss(std::slice::from_ref(&a), &[]),
        Err(Error::ShapeMismatch(_))
    ));
}

#[test]
fn loss_matches_scalar_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (h, w) = (rng.gen_range(1..9), rng.gen_range(1..9));
        let p: Vec<NormalMap> = (0..3).map(|_| random_map(&mut rng, h, w, 0.6)).collect();
        let t: Vec<NormalMap> = (0..3).map(|_| random_map(&mut rng, h, w, 0.6)).collect();
        let mut expected = 0.0;
        for (pm, tm) in p.iter().zip(&t) {
            let mut s = 0.0;
            for r in 0..h {
                for c in 0..w {
                    let (pc, tc) = (pm.is_covered(r, c), tm.is_covered(r, c));
                    if pc && tc {
                        let d = pm.normal(r, c) - tm.normal(r, c);
                        s += d.x * d.x + d.y * d.y + d.z * d.z;
                    } else if pc {
                        s += pm.normal(r, c).norm_squared();
                    } else if tc {
                        s += tm.normal(r, c).norm_squared();
                    }
                }
            }
            expected += s / (h * w) as f64;
        }
        assert!((normal_loss(&p, &t).unwrap().0 - expected).abs() < 1e-12);
    }
}

#[test]
fn map_validation() {
    assert!(NormalMap::from_parts(1, 2, vec![Vec3::z(), Vec3::zeros()], vec![true, false]).is_ok());
    assert!(NormalMap::from_parts(1, 2, vec![Vec3::z() * 1.1, Vec3::zeros()], vec![true, false]).is_err());
    assert!(NormalMap::from_parts(1, 2, vec![Vec3::z(), Vec3::z()], vec![true, false]).is_err());
    assert!(NormalMap::from_parts(1, 1, vec![Vec3::z(), Vec3::z()], vec![true]).is_err());
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-4;
    let mut checked = 0;
    for _ in 0..20 {
        let mesh = random_sheet(&mut rng);
        let views: Vec<CameraPose> = (0..2)
            .map(|_| CameraPose::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0), 8, 8, 3.0).unwrap())
            .collect();
        let targets: Vec<NormalMap> = views.iter().map(|_| random_map(&mut rng, 8, 8, 0.8)).collect();
        let buffers: Vec<FaceBuffer> = views.iter().map(|c| rasterize(&mesh, c)).collect();
        let analytic = vertex_gradients(&mesh, &targets, &views).unwrap();
        for v in 0..mesh.vertex_count() {
            for axis in 0..3 {
                let shifted = |d: f64| {
                    let mut p = mesh.vertices().to_vec();
                    p[v][axis] += d;
                    frozen_loss(&mesh.with_positions(p).unwrap(), &buffers, &targets, &views)
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let g = analytic[v][axis];
                if g.abs() > 1e-8 {
                    checked += 1;
                    let rel = (g - fd).abs() / g.abs().max(fd.abs());
                    assert!(rel < 1e-3, "vertex {v} axis {axis}: {g} vs {fd}");
                }
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn gradient_zero_at_self_render_and_translation_invariant() {
    let mesh = radial_bump(&icosphere(10.0, 2), Vec3::z(), 1.0, 0.4);
    let views = default_views(48, 48, 24.0).unwrap();
    let targets: Vec<NormalMap> = views.iter().map(|c| render_normals(&mesh, c)).collect();
    let g = vertex_gradients(&mesh, &targets, &views).unwrap();
    assert!(g.iter().all(|v| *v == Vec3::zeros()));

    let other = icosphere(10.0, 2);
    let front = vec![CameraPose::new(0.0, 0.0, 48, 48, 24.0).unwrap()];
    let buf = rasterize(&other, &front[0]);
    let t = vec![render_normals(&mesh, &front[0])];
    let base = vertex_gradients(&other, &t, &front).unwrap();
    // A sub-pixel shift that leaves the assignment unchanged.
    let moved = other.map_positions(|p| p + Vec3::new(1e-9, -1e-9, 0.0)).unwrap();
    assert_eq!(rasterize(&moved, &front[0]), buf);
    let shifted = vertex_gradients(&moved, &t, &front).unwrap();
    for (a, b) in base.iter().zip(&shifted) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn config_contracts() {
    let mesh = icosphere(10.0, 1);
    let views = default_views(16, 16, 24.0).unwrap();
    let targets: Vec<NormalMap> = views.iter().map(|c| render_normals(&mesh, c)).collect();
    let mut cfg = RemeshConfig::new(views.clone());
    cfg.steps = 0;
    assert!(remesh(&mesh, &targets, &cfg).is_err());
    cfg.steps = 1;
    cfg.learning_rate = 0.0;
    let out = remesh(&mesh, &targets, &cfg).unwrap();
    assert_eq!(out.mesh.vertices(), mesh.vertices());
    assert_eq!(out.history.len(), 2);
    assert!(matches!(
        remesh(&mesh, &targets[..3], &RemeshConfig::new(views)),
        Err(Error::WrongViewCount { expected: 10, got: 3 })
    ));
}

#[test]
fn non_finite_update_reports_step() {
    let mesh = icosphere(10.0, 1);
    let views = default_views(16, 16, 24.0).unwrap();
    let targets: Vec<NormalMap> = views.iter().map(|c| render_normals(&mesh, c)).collect();
    let mut cfg = RemeshConfig::new(views);
    cfg.laplacian_weight = 1e308;
    cfg.learning_rate = 1e308;
    assert!(matches!(remesh(&mesh, &targets, &cfg), Err(Error::NonFiniteUpdate(0))));
}

#[test]
fn spike_relaxes_toward_ring_mean() {
    let sphere = icosphere(10.0, 2);
    let spike = 0;
    let mut p = sphere.vertices().to_vec();
    p[spike] *= 1.5;
    let spiked = sphere.with_positions(p).unwrap();
    let views = default_views(64, 64, 32.0).unwrap();
    let targets: Vec<NormalMap> = views.iter().map(|c| render_normals(&spiked, c)).collect();
    let lap = build_laplacian(&spiked);
    let ring_gap = |m: &TriangleMesh| {
        let mean: Vec3 = lap.row(spike).map(|(j, _)| m.vertices()[j]).sum::<Vec3>() / lap.row(spike).count() as f64;
        (m.vertices()[spike] - mean).norm()
    };
    let mut cfg = RemeshConfig::new(views);
    cfg.laplacian_weight = 1.0;
    cfg.steps = 1;
    let mut mesh = spiked;
    let mut gap = ring_gap(&mesh);
    for _ in 0..20 {
        mesh = remesh(&mesh, &targets, &cfg).unwrap().mesh;
        let next = ring_gap(&mesh);
        assert!(next < gap, "{next} >= {gap}");
        gap = next;
    }
}

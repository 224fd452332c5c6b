use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynslam::exec::Execution;
use dynslam::experiment::{preset, SceneData, Solver};
use dynslam::formulations::{Formulation, GraphBuilder};
use dynslam::graph::{FactorGraph, Values};
use dynslam::parallel::ParallelRunner;
use dynslam::sim::SceneConfig;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn scene(objects: usize, frames: u32) -> SceneConfig {
    let cfg = preset("continuous-visibility-4obj").unwrap();
    let mut scene = cfg.resolve_scene().unwrap();
    scene.num_frames = frames;
    let template = scene.objects[0].clone();
    scene.objects = (0..objects)
        .map(|i| {
            let mut o = template.clone();
            o.initial_pose = o.initial_pose.retract(&dynslam::geometry::twist([0.0, 0.05 * i as f64, 0.0], [1.5 * i as f64 - 5.0, 0.0, 1.0 * i as f64]));
            o
        })
        .collect();
    scene
}

fn linearize(c: &mut Criterion) {
    let scene_cfg = scene(4, 30);
    let cfg = preset("continuous-visibility-4obj").unwrap();
    let data = SceneData::generate(&scene_cfg).unwrap();
    let spec = cfg.method(&scene_cfg, Formulation::Hybrid, Solver::Batch);
    let mut builder = GraphBuilder::new(Formulation::Hybrid, spec.builder).unwrap();
    let mut graph = FactorGraph::new();
    let mut values = Values::new();
    for z in &data.frames {
        let delta = builder.process_frame(&values, z).unwrap().joint().unwrap();
        values.extend(&delta.values).unwrap();
        for f in delta.factors {
            graph.add(f);
        }
    }
    let mut group = c.benchmark_group("linearize");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, graph.len()), |b| b.iter(|| graph.linearize(&values, exec).unwrap()));
    }
    group.finish();
}

fn parallel_hybrid(c: &mut Criterion) {
    let cfg = preset("continuous-visibility-4obj").unwrap();
    let mut group = c.benchmark_group("parallel_hybrid");
    group.sample_size(10);
    for objects in [2, 8] {
        let scene_cfg = scene(objects, 15);
        let data = SceneData::generate(&scene_cfg).unwrap();
        let spec = cfg.method(&scene_cfg, Formulation::Hybrid, Solver::Parallel);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, objects), &data, |b, data| {
                b.iter(|| {
                    let mut runner = ParallelRunner::new(spec.builder.clone(), spec.incremental.clone(), exec).unwrap();
                    for z in &data.frames {
                        runner.process_frame(z).unwrap();
                    }
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, linearize, parallel_hybrid);
criterion_main!(benches);

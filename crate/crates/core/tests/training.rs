use mrn::autodiff::OptimizerConfig;
use mrn::spaces::Domain;
use mrn::train::{staged_train, toy_dataset, train, ToyTask, TrainConfig};
use mrn::unet::{build_unet, Owner, UNetSpec};

fn setup() -> (mrn::unet::UNetState, mrn::train::Dataset) {
    let mut spec = UNetSpec::multi_resnet(Domain::Square, 2, 1, 2);
    spec.adapters = true;
    let u = build_unet(&spec, 3).unwrap();
    let data = toy_dataset(ToyTask::Identity, Domain::Square, 2, 1, 6, 9).unwrap();
    (u, data)
}

#[test]
fn freezing_keeps_earlier_stages_bitwise() {
    let (u, data) = setup();
    let mut cfg = TrainConfig::new(OptimizerConfig::adam(1e-2), 15, 1);
    cfg.freeze = true;
    cfg.stages = vec![1];
    let (first, _) = staged_train(&u, &[data.clone(), data.clone()], &cfg).unwrap();
    cfg.stages = vec![1, 2];
    let (both, traces) = staged_train(&u, &[data.clone(), data], &cfg).unwrap();
    assert_eq!(traces.len(), 2);
    assert!(both.frozen().iter().all(|&f| !f), "flags are restored");
    let mut changed = 0;
    for (a, b) in first.params().iter().zip(both.params()) {
        if a.owner.resolution() <= 1 {
            assert!(a.tensor.data().iter().zip(b.tensor.data()).all(|(x, y)| x.to_bits() == y.to_bits()), "{:?}", a.owner);
        } else if a.tensor != b.tensor {
            changed += 1;
        }
    }
    assert!(changed > 0, "the second stage trained something");
}

#[test]
fn unfrozen_stages_keep_training() {
    let (u, data) = setup();
    let mut cfg = TrainConfig::new(OptimizerConfig::adam(1e-2), 15, 1);
    cfg.stages = vec![1, 2];
    let (a, _) = staged_train(&u, &[data.clone(), data.clone()], &cfg).unwrap();
    cfg.stages = vec![1];
    let (b, _) = staged_train(&u, &[data.clone(), data], &cfg).unwrap();
    let bottleneck = |n: &mrn::unet::UNetState| n.params().iter().find(|p| p.owner == Owner::Bottleneck).unwrap().tensor.clone();
    assert_ne!(bottleneck(&a), bottleneck(&b));
}

#[test]
fn training_is_deterministic_and_decreases_loss() {
    let (u, data) = setup();
    let mut cfg = TrainConfig::new(OptimizerConfig::adam(1e-2), 40, 5);
    cfg.batch_size = Some(4);
    let (a, ta) = train(&u, &data, &cfg).unwrap();
    let (b, tb) = train(&u, &data, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    assert_eq!(ta.len(), 41);
    assert!(ta.last().unwrap() < &ta[0]);
}

#[test]
fn uns_preserves_trained_nets() {
    let (u, data) = setup();
    let (net, _) = train(&u, &data, &TrainConfig::new(OptimizerConfig::adam(1e-2), 5, 0)).unwrap();
    let back = mrn::io::decode_uns(&mrn::io::encode_uns(&net)).unwrap();
    assert_eq!(back, net);
    let v = &data.inputs()[0];
    assert_eq!(mrn::unet::unet_forward(&back, v, 2).unwrap(), mrn::unet::unet_forward(&net, v, 2).unwrap());
}

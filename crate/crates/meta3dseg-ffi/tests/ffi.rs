//! Exercises the C ABI end to end against real checkpoints: handle
//! lifecycle, the two-call buffer pattern, status codes and the
//! per-thread error message.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use meta3dseg::cli::{learner_checkpoint, meta_checkpoint};
use meta3dseg::geometry::{
    generate_shape_sampled, sample_surface_points, save_dataset, voxelize, Category,
    DatasetEntry, Split,
};
use meta3dseg::learner::ArchitectureConfig;
use meta3dseg::training::{fine_tune, meta_train, TrainConfig};
use meta3dseg_ffi::*;
use tempfile::TempDir;

fn tiny_arch() -> ArchitectureConfig {
    ArchitectureConfig {
        resolution: 4,
        conv_channels: vec![2, 4],
        decoder_dims: vec![6],
        predictor_dims: vec![4],
        latent_dim: 3,
        f1_hidden_dims: vec![],
        f2_hidden_dims: vec![],
    }
}

fn entries() -> Vec<DatasetEntry> {
    let categories = [Category::Mug, Category::Mug, Category::Table];
    categories
        .iter()
        .enumerate()
        .map(|(i, &category)| {
            let seed = 60 + i as u64;
            let shape = generate_shape_sampled(category, seed).expect("generates");
            DatasetEntry {
                id: format!("{category}-{i}"),
                category,
                seed,
                split: Split::Train,
                grid: voxelize(&shape, 4).expect("voxelizes"),
                cloud: sample_surface_points(&shape, 32, 700 + i as u64).expect("samples"),
            }
        })
        .collect()
}

/// Dataset dir plus a trained meta/learner checkpoint pair.
fn fixtures(dir: &Path, seed: u64) -> (PathBuf, PathBuf, PathBuf) {
    let arch = tiny_arch();
    let config = TrainConfig {
        meta_epochs: 2,
        finetune_steps: 2,
        batch: 2,
        occupancy_samples: 16,
        seed,
        ..TrainConfig::default()
    };
    let entries = entries();
    let data = dir.join("data");
    save_dataset(&entries, &data).expect("saves");

    let outcome = meta_train::<f32, _>(&entries, &arch, &config, |_| {}).expect("meta-trains");
    let meta_ckpt =
        meta_checkpoint(&outcome.params, &arch, &config, &outcome.report, "test").expect("packs");
    let meta = dir.join("meta.ckpt");
    meta_ckpt.save(&meta).expect("writes");

    let mugs: Vec<DatasetEntry> = entries
        .iter()
        .filter(|e| e.category == Category::Mug)
        .cloned()
        .collect();
    let tuned = fine_tune(&outcome.params, &mugs, &arch, &config, |_| {}).expect("fine-tunes");
    let learner_ckpt = learner_checkpoint(
        &tuned,
        &arch,
        &config,
        &meta_ckpt.header.params_digest,
        "test",
    )
    .expect("packs");
    let learner = dir.join("learner.ckpt");
    learner_ckpt.save(&learner).expect("writes");

    (data, meta, learner)
}

fn c_path(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0i8; 256];
    let n = unsafe { m3ds_last_error(buf.as_mut_ptr() as *mut _, buf.len()) };
    let text = unsafe { CStr::from_ptr(buf.as_ptr() as *const _) };
    let text = text.to_str().unwrap().to_owned();
    assert!(n >= text.len());
    text
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(m3ds_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn dataset_and_model_round_trip_through_the_abi() {
    let tmp = TempDir::new().unwrap();
    let (data, meta, learner) = fixtures(tmp.path(), 5);

    let mut ds: *mut M3dsDataset = ptr::null_mut();
    let data_c = c_path(&data);
    let status = unsafe { m3ds_dataset_load(data_c.as_ptr(), &mut ds) };
    assert_eq!(status, M3dsStatus::Ok, "{}", last_error());
    assert!(!ds.is_null());
    assert_eq!(unsafe { m3ds_dataset_len(ds) }, 3);

    let needed = unsafe { m3ds_dataset_shape_id(ds, 0, ptr::null_mut(), 0) };
    assert!(needed > 0);
    let mut buf = vec![0i8; needed + 1];
    unsafe { m3ds_dataset_shape_id(ds, 0, buf.as_mut_ptr() as *mut _, buf.len()) };
    let id = unsafe { CStr::from_ptr(buf.as_ptr() as *const _) }
        .to_str()
        .unwrap()
        .to_owned();
    assert_eq!(id, "mug-0");
    assert_eq!(
        unsafe { m3ds_dataset_shape_id(ds, 99, ptr::null_mut(), 0) },
        0,
        "out of range must report length 0"
    );
    assert!(last_error().contains("out of range"));

    let mut model: *mut M3dsModel = ptr::null_mut();
    let (meta_c, learner_c) = (c_path(&meta), c_path(&learner));
    let status = unsafe { m3ds_model_load(meta_c.as_ptr(), learner_c.as_ptr(), &mut model) };
    assert_eq!(status, M3dsStatus::Ok, "{}", last_error());

    let shape_id = CString::new(id).unwrap();
    let mut n_points = 0usize;
    let status = unsafe {
        m3ds_model_segment(model, ds, shape_id.as_ptr(), ptr::null_mut(), 0, &mut n_points)
    };
    assert_eq!(status, M3dsStatus::Ok, "{}", last_error());
    assert_eq!(n_points, 32);
    let mut labels = vec![0u32; n_points];
    let status = unsafe {
        m3ds_model_segment(
            model,
            ds,
            shape_id.as_ptr(),
            labels.as_mut_ptr(),
            labels.len(),
            &mut n_points,
        )
    };
    assert_eq!(status, M3dsStatus::Ok, "{}", last_error());
    assert!(labels.iter().all(|&b| b < 4), "branch out of range");

    let missing = CString::new("boat-7").unwrap();
    let status = unsafe {
        m3ds_model_segment(model, ds, missing.as_ptr(), ptr::null_mut(), 0, &mut n_points)
    };
    assert_eq!(status, M3dsStatus::InvalidArgument);
    assert!(last_error().contains("boat-7"));

    let category = CString::new("mug").unwrap();
    let (mut iou, mut acc) = (f64::NAN, f64::NAN);
    let status =
        unsafe { m3ds_model_evaluate(model, ds, category.as_ptr(), &mut iou, &mut acc) };
    assert_eq!(status, M3dsStatus::Ok, "{}", last_error());
    assert!((0.0..=1.0).contains(&iou), "mIoU {iou}");
    assert!((0.0..=1.0).contains(&acc), "accuracy {acc}");

    unsafe {
        m3ds_model_free(model);
        m3ds_dataset_free(ds);
        m3ds_model_free(ptr::null_mut());
        m3ds_dataset_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_status_and_message() {
    let tmp = TempDir::new().unwrap();

    let mut ds: *mut M3dsDataset = ptr::null_mut();
    let missing = c_path(&tmp.path().join("nowhere"));
    let status = unsafe { m3ds_dataset_load(missing.as_ptr(), &mut ds) };
    assert_eq!(status, M3dsStatus::Io);
    assert!(ds.is_null() || unsafe { m3ds_dataset_len(ds) } == 0);
    assert!(!last_error().is_empty());

    let status = unsafe { m3ds_dataset_load(ptr::null(), &mut ds) };
    assert_eq!(status, M3dsStatus::NullPointer);

    let mut model: *mut M3dsModel = ptr::null_mut();
    let status = unsafe { m3ds_model_load(missing.as_ptr(), missing.as_ptr(), &mut model) };
    assert_eq!(status, M3dsStatus::Io);

    let (_, meta, _) = fixtures(tmp.path(), 5);
    let rewired = tmp.path().join("rewired");
    std::fs::create_dir_all(&rewired).unwrap();
    let (_, _, other_learner) = fixtures(&rewired, 6);
    let (meta_c, other_c) = (c_path(&meta), c_path(&other_learner));
    let status = unsafe { m3ds_model_load(meta_c.as_ptr(), other_c.as_ptr(), &mut model) };
    assert_eq!(
        status,
        M3dsStatus::InvalidConfig,
        "a learner tuned against different meta weights must be rejected"
    );
}

#[test]
fn generated_header_matches_the_surface() {
    let header = include_str!("../include/meta3dseg.h");
    for symbol in [
        "m3ds_version",
        "m3ds_last_error",
        "m3ds_dataset_load",
        "m3ds_dataset_len",
        "m3ds_dataset_shape_id",
        "m3ds_dataset_free",
        "m3ds_model_load",
        "m3ds_model_free",
        "m3ds_model_segment",
        "m3ds_model_evaluate",
        "M3DS_STATUS_OK",
        "M3DS_STATUS_DIVERGED",
    ] {
        assert!(header.contains(symbol), "header lost {symbol}");
    }
}

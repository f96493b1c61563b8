use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forgetdyn::heatmap_io::{read_counts, read_heatmap_csv, write_heatmap_csv};
use forgetdyn::masks::write_class_grid;
use forgetdyn_core::tracker::HeatMap;
use forgetdyn_core::{Grid, RngStream};
use serde_json::json;

fn forgetdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forgetdyn"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

type Fixture<'a> = (&'a str, Grid<u8>, Vec<Grid<u8>>);

fn random_grid(rng: &mut RngStream, h: usize, w: usize, classes: u64) -> Grid<u8> {
    Grid::from_fn(h, w, |_, _| rng.below(classes) as u8)
}

/// Writes labels and predictions for each image, returns the manifest path.
fn write_fixture(dir: &Path, images: &[Fixture<'_>], extra: serde_json::Value) -> PathBuf {
    fs::create_dir_all(dir.join("labels")).unwrap();
    fs::create_dir_all(dir.join("pred")).unwrap();
    let mut entries = Vec::new();
    for (id, labels, preds) in images {
        let lp = format!("labels/{id}.png");
        write_class_grid(&dir.join(&lp), labels).unwrap();
        let mut pp = Vec::new();
        for (e, pred) in preds.iter().enumerate() {
            let name = format!("pred/{id}.e{e:03}.raw");
            write_class_grid(&dir.join(&name), pred).unwrap();
            pp.push(name);
        }
        entries.push(json!({ "image_id": id, "labels": lp, "predictions": pp }));
    }
    let mut manifest = json!({ "version": 1, "num_classes": 4, "images": entries });
    if let serde_json::Value::Object(extra) = extra {
        manifest.as_object_mut().unwrap().extend(extra);
    }
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

fn recount(labels: &Grid<u8>, preds: &[Grid<u8>]) -> Vec<u32> {
    (0..labels.len())
        .map(|i| {
            let ok: Vec<bool> = preds
                .iter()
                .map(|p| p.as_slice()[i] == labels.as_slice()[i])
                .collect();
            ok.windows(2).filter(|w| w[0] && !w[1]).count() as u32
        })
        .collect()
}

#[test]
fn track_frozen_predictions_give_zero_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(1);
    let labels = random_grid(&mut rng, 5, 6, 4);
    let pred = random_grid(&mut rng, 5, 6, 4);
    let manifest = write_fixture(tmp.path(), &[("a", labels, vec![pred; 6])], json!({}));
    let out = tmp.path().join("out");
    let res = forgetdyn(&["track", "--manifest", p(&manifest), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let hm = read_heatmap_csv(&out.join("a.heatmap.csv")).unwrap();
    assert_eq!(hm.total_events(), 0);
    assert_eq!(hm.epochs_observed(), 6);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary, "image_id,total_events,epochs_observed\na,0,6\n");
}

#[test]
fn track_scripted_images_match_recount() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(2);
    let images: Vec<Fixture<'_>> = ["x", "y", "z"]
        .into_iter()
        .map(|id| {
            let labels = random_grid(&mut rng, 4, 7, 3);
            let preds = (0..9).map(|_| random_grid(&mut rng, 4, 7, 3)).collect();
            (id, labels, preds)
        })
        .collect();
    let manifest = write_fixture(tmp.path(), &images, json!({}));
    let out = tmp.path().join("out");
    assert_eq!(
        code(&forgetdyn(&[
            "track",
            "--manifest",
            p(&manifest),
            "--out",
            p(&out)
        ])),
        0
    );
    for (id, labels, preds) in &images {
        let expected = recount(labels, preds);
        let hm = read_heatmap_csv(&out.join(format!("{id}.heatmap.csv"))).unwrap();
        assert_eq!(hm.counts().as_slice(), expected.as_slice());
        let png = read_counts(&out.join(format!("{id}.heatmap.png"))).unwrap();
        assert_eq!(png.as_slice(), expected.as_slice());
    }
}

#[test]
fn track_ignore_label_from_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = Grid::from_rows(&[[0u8, 9], [1, 9]]);
    let preds = vec![
        Grid::from_rows(&[[0u8, 0], [1, 1]]),
        Grid::from_rows(&[[1u8, 0], [0, 1]]),
    ];
    let manifest = write_fixture(tmp.path(), &[("g", labels, preds)], json!({}));
    let out = tmp.path().join("out");
    // 9 is not a class of a 4-class manifest.
    assert_eq!(
        code(&forgetdyn(&[
            "track",
            "--manifest",
            p(&manifest),
            "--out",
            p(&out)
        ])),
        3
    );
    let res = forgetdyn(&[
        "track",
        "--manifest",
        p(&manifest),
        "--out",
        p(&out),
        "--ignore-label",
        "9",
    ]);
    assert_eq!(code(&res), 0);
    let hm = read_heatmap_csv(&out.join("g.heatmap.csv")).unwrap();
    assert_eq!(hm.counts().as_slice(), &[1, 0, 1, 0]);
    assert!(hm.is_ignored(1) && hm.is_ignored(3) && !hm.is_ignored(0));
}

#[test]
fn track_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(3);
    let labels = random_grid(&mut rng, 3, 3, 4);
    let manifest = write_fixture(
        tmp.path(),
        &[("m", labels.clone(), vec![labels.clone(); 2])],
        json!({}),
    );
    let out = tmp.path().join("out");

    fs::remove_file(tmp.path().join("pred/m.e001.raw")).unwrap();
    let res = forgetdyn(&["track", "--manifest", p(&manifest), "--out", p(&out)]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("m.e001.raw"));

    let wrong = write_fixture(
        &tmp.path().join("dims"),
        &[("m", labels, vec![Grid::filled(3, 4, 0)])],
        json!({}),
    );
    assert_eq!(
        code(&forgetdyn(&[
            "track",
            "--manifest",
            p(&wrong),
            "--out",
            p(&out)
        ])),
        3
    );

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"version\": 1,").unwrap();
    assert_eq!(
        code(&forgetdyn(&[
            "track",
            "--manifest",
            p(&bad),
            "--out",
            p(&out)
        ])),
        2
    );
    assert_eq!(
        code(&forgetdyn(&[
            "track",
            "--manifest",
            p(&tmp.path().join("nope.json")),
            "--out",
            p(&out)
        ])),
        2
    );
}

fn rank_fixture(dir: &Path, n: usize) -> Vec<(String, Grid<u32>, Grid<u8>)> {
    let hm_dir = dir.join("maps");
    let lb_dir = dir.join("labels");
    fs::create_dir_all(&hm_dir).unwrap();
    fs::create_dir_all(&lb_dir).unwrap();
    let mut rng = RngStream::new(10);
    (0..n)
        .map(|i| {
            let id = format!("slice-{:02}", (i * 3) % n);
            let labels = random_grid(&mut rng, 5, 5, 3);
            let counts = Grid::from_fn(5, 5, |_, _| rng.below(3) as u32);
            let hm =
                HeatMap::from_parts(counts.clone(), 6, Grid::filled(5, 5, true), None).unwrap();
            write_heatmap_csv(&hm_dir.join(format!("{id}.heatmap.csv")), &hm).unwrap();
            write_class_grid(&lb_dir.join(format!("{id}.png")), &labels).unwrap();
            (id, counts, labels)
        })
        .collect()
}

#[test]
fn rank_matches_oracle_order() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = rank_fixture(tmp.path(), 10);
    let out = tmp.path().join("rank.csv");
    let args = |k: &str| {
        forgetdyn(&[
            "rank",
            "--heatmaps",
            p(&tmp.path().join("maps")),
            "--labels",
            p(&tmp.path().join("labels")),
            "--class",
            "2",
            "--top",
            k,
            "--out",
            p(&out),
        ])
    };
    assert_eq!(code(&args("4")), 0);

    let mut expected: Vec<(f64, String, usize)> = fixtures
        .iter()
        .filter_map(|(id, counts, labels)| {
            let idx: Vec<usize> = (0..labels.len())
                .filter(|&i| labels.as_slice()[i] == 2)
                .collect();
            let sum: u32 = idx.iter().map(|&i| counts.as_slice()[i]).sum();
            (!idx.is_empty()).then(|| (sum as f64 / idx.len() as f64, id.clone(), idx.len()))
        })
        .collect();
    expected.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(&row[0], (i + 1).to_string());
        assert_eq!(&row[1], expected[i].1);
        assert_eq!(row[2].parse::<f64>().unwrap(), expected[i].0);
        assert_eq!(row[3].parse::<usize>().unwrap(), expected[i].2);
    }

    assert_eq!(code(&args("100")), 0);
    let n = csv::Reader::from_path(&out).unwrap().records().count();
    assert_eq!(n, expected.len());
}

#[test]
fn rank_absent_class_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    rank_fixture(tmp.path(), 3);
    let res = forgetdyn(&[
        "rank",
        "--heatmaps",
        p(&tmp.path().join("maps")),
        "--labels",
        p(&tmp.path().join("labels")),
        "--class",
        "7",
        "--top",
        "2",
        "--out",
        "-",
    ]);
    assert_eq!(code(&res), 4);
}

#[test]
fn rank_to_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    rank_fixture(tmp.path(), 3);
    let res = forgetdyn(&[
        "rank",
        "--heatmaps",
        p(&tmp.path().join("maps")),
        "--labels",
        p(&tmp.path().join("labels")),
        "--class",
        "0",
        "--top",
        "1",
        "--out",
        "-",
    ]);
    assert_eq!(code(&res), 0);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("rank,image_id,density,class_pixel_count\n1,"));
    assert_eq!(text.lines().count(), 2);
}

/// Linear blend between five fixed anchors, computed from scratch.
fn expected_colour(count: u32, max: u32) -> [u8; 3] {
    const ANCHORS: [[f64; 3]; 5] = [
        [5.0, 48.0, 97.0],
        [67.0, 147.0, 195.0],
        [247.0, 247.0, 247.0],
        [214.0, 96.0, 77.0],
        [103.0, 0.0, 31.0],
    ];
    let level = if max == 0 {
        0.0
    } else {
        (count as f64 * 255.0 / max as f64).round()
    };
    let pos = level / 255.0 * 4.0;
    let seg = (pos as usize).min(3);
    let f = pos - seg as f64;
    let mut out = [0u8; 3];
    for ch in 0..3 {
        out[ch] = (ANCHORS[seg][ch] * (1.0 - f) + ANCHORS[seg + 1][ch] * f).round() as u8;
    }
    out
}

#[test]
fn render_uses_palette() {
    let tmp = tempfile::tempdir().unwrap();
    let counts = Grid::from_rows(&[[0u32, 1, 2], [3, 4, 7]]);
    let hm = HeatMap::from_parts(counts.clone(), 15, Grid::filled(2, 3, true), None).unwrap();
    let src = tmp.path().join("h.heatmap.csv");
    write_heatmap_csv(&src, &hm).unwrap();
    let png = tmp.path().join("h.png");
    let res = forgetdyn(&[
        "render",
        "--heatmap",
        p(&src),
        "--out",
        p(&png),
        "--palette",
        "diverging",
    ]);
    assert_eq!(code(&res), 0);
    let img = image::open(&png).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (3, 2));
    for r in 0..2 {
        for c in 0..3 {
            let got = img.get_pixel(c, r).0;
            assert_eq!(got, expected_colour(*counts.get(r as usize, c as usize), 7));
        }
    }
    assert_eq!(img.get_pixel(0, 0).0, [5, 48, 97]);
    assert_eq!(img.get_pixel(2, 1).0, [103, 0, 31]);
    let scale = fs::read_to_string(tmp.path().join("h.png.scale.txt")).unwrap();
    assert!(scale.contains("max_count,7\n"));

    let res = forgetdyn(&[
        "render",
        "--heatmap",
        p(&src),
        "--out",
        p(&png),
        "--palette",
        "rainbow",
    ]);
    assert_eq!(code(&res), 2);
}

fn small_config(dir: &Path, conditions: &str) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        format!(
            "[data]\nheight = 24\nwidth = 24\ninlines = 10\ncrosslines = 5\ntest_slices = 2\n\n\
             [train]\nepochs = 4\n\n\
             [augment]\nnum_sources = 2\ntransfers_per_source = 3\nseeds = [1, 2]\nrender_top = 1\nconditions = {conditions}\n"
        ),
    )
    .unwrap();
    path
}

#[test]
fn experiment_without_augmentation_matches_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "[\"none\"]");
    let out = tmp.path().join("run");
    let res = forgetdyn(&["experiment", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[1].strip_prefix("baseline"),
        lines[2].strip_prefix("none")
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["conditions"].as_array().unwrap().len(), 2);
    assert!(out.join("per_seed.csv").is_file());
    let renders = fs::read_dir(out.join("heatmaps")).unwrap().count();
    // baseline + none, each with a sidecar
    assert_eq!(renders, 4);
}

#[test]
fn experiment_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "[\"mixup\"]");
    let out = tmp.path().join("run");
    assert_eq!(
        code(&forgetdyn(&[
            "experiment",
            "--config",
            p(&cfg),
            "--out",
            p(&out)
        ])),
        2
    );
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[train]\nlearning_rate = -1.0\n").unwrap();
    assert_eq!(
        code(&forgetdyn(&[
            "experiment",
            "--config",
            p(&bad),
            "--out",
            p(&out)
        ])),
        2
    );
    fs::write(&bad, "[augment]\ntarget_class = 9\n").unwrap();
    assert_eq!(
        code(&forgetdyn(&[
            "experiment",
            "--config",
            p(&bad),
            "--out",
            p(&out)
        ])),
        3
    );
    fs::write(&bad, "[tain]\nepochs = 3\n").unwrap();
    assert_eq!(
        code(&forgetdyn(&[
            "experiment",
            "--config",
            p(&bad),
            "--out",
            p(&out)
        ])),
        2
    );
}

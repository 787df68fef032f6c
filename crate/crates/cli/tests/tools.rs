use std::path::Path;
use std::process::{Command, Output};

use seiswork::{Kind, Raster};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seiswork"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_field(path: &Path, rows: usize, cols: usize, f: impl Fn(usize, usize) -> f32) {
    let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
    Raster::new(Kind::Field, rows, cols, [1.0, 1.0], data)
        .unwrap()
        .write(path)
        .unwrap();
}

#[test]
fn metrics_row_for_identical_images() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.f32r");
    write_field(&a, 32, 32, |j, i| ((j * 7 + i * 3) % 11) as f32);
    let a = a.to_str().unwrap();
    let text = stdout(&bin(&["metrics", a, a, "--header"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "file_a,file_b,ssim,l1,l2,feature,combined");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 7);
    assert_eq!(fields[0], a);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 1.0);
    for f in &fields[3..] {
        assert_eq!(f.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn metrics_rejects_mismatched_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.f32r"), tmp.path().join("b.f32r"));
    write_field(&a, 32, 32, |_, _| 1.0);
    write_field(&b, 32, 31, |_, _| 1.0);
    let o = bin(&["metrics", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn prune_report_and_output() {
    let tmp = tempfile::tempdir().unwrap();
    let w = tmp.path().join("w.f32r");
    let out = tmp.path().join("p.f32r");
    // Magnitudes 1..=20 with alternating signs.
    write_field(&w, 4, 5, |j, i| {
        let k = (j * 5 + i) as f32 + 1.0;
        if (j + i) % 2 == 0 {
            k
        } else {
            -k
        }
    });
    let text = stdout(&bin(&[
        "prune",
        "--input",
        w.to_str().unwrap(),
        "--fraction",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(text.trim(), "20,0.25,0.25");
    let p = Raster::read(&out).unwrap();
    for (k, v) in p.data.iter().enumerate() {
        assert_eq!(*v == 0.0, k < 5, "index {k}");
    }

    let bad = bin(&["prune", "--input", w.to_str().unwrap(), "--fraction", "1.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn nas_discretize_writes_a_genotype() {
    let tmp = tempfile::tempdir().unwrap();
    let alpha = tmp.path().join("alpha.csv");
    let geno = tmp.path().join("cell.txt");
    // Two nodes: 2 + 3 edges; node 1 prefers its edge from node 0 (index 2).
    std::fs::write(
        &alpha,
        "3,0,0,0,0,9\n0,0,0,0,2,0\n0,0,0,0,0,0\n0,1,0,0,0,0\n0,0,4,0,0,0\n",
    )
    .unwrap();
    let text = stdout(&bin(&[
        "nas-discretize",
        "--alpha",
        alpha.to_str().unwrap(),
        "--nodes",
        "2",
        "--kind",
        "decoder",
        "--depth",
        "1",
        "--base-channels",
        "1",
        "--no-fixed-layers",
        "--out",
        geno.to_str().unwrap(),
    ]));
    let g = std::fs::read_to_string(&geno).unwrap();
    assert_eq!(
        g,
        "kind: decoder\ninputs: 2\nnode 0: (0, conv3x3) (1, identity)\nnode 1: (1, dilated_conv3x3) (2, max_pool3x3)\n"
    );
    // One cell at width 1: two 3x3 convolutions of 10 parameters each.
    assert_eq!(text.trim(), "param_count,20");

    std::fs::write(&alpha, "1,2,3\n").unwrap();
    let bad = bin(&[
        "nas-discretize",
        "--alpha",
        alpha.to_str().unwrap(),
        "--nodes",
        "1",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

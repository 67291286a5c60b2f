//! Panel and per-replication CSV files survive a write/read cycle bit for bit.
//!
//! `cargo run --example csv_roundtrip`

use panel_sphericity::mc::{read_records, records_to_string, run_replications, McConfig};
use panel_sphericity::panel_csv::{read_panel, write_panel};
use panel_sphericity::{gen_disturbances, gen_panel, CovarianceSpec, ErrorDistribution};

fn main() -> panel_sphericity::Result<()> {
    let v = gen_disturbances(&CovarianceSpec::identity(1.0), ErrorDistribution::Rademacher, 4, 3, 1)?;
    let panel = gen_panel(&[2.0], &v, 2)?;
    let mut buf = Vec::new();
    write_panel(&mut buf, &panel, None)?;
    print!("{}", String::from_utf8_lossy(&buf));
    let back = read_panel(buf.as_slice())?.panel;
    assert_eq!(back.y, panel.y);
    assert_eq!(back.x, panel.x);

    let (cfg, _) = McConfig::parse("scenario=null\nn=20\nt=15\nreps=3\nseed=4\n")?;
    let recs = run_replications(&cfg)?;
    let text = records_to_string(&recs)?;
    print!("{text}");
    assert_eq!(read_records(text.as_bytes())?, recs);
    println!("round trip exact");
    Ok(())
}

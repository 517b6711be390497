//! From an incidence matrix to the three phylogeny views the samplers use.

use coalcount::{
    build_perfect_phylogeny, deduplicate, export_phylogeny, parse_matrix, to_kingman, to_tajima,
    ExportFormat, MatrixFormat,
};

const DATA: &str =
    "id,s1,s2,s3,s4\na,0,1,0,0\nb,1,0,1,0\nc,0,0,0,1\nd,0,0,0,1\ne,0,0,0,1\nf,0,0,0,1\n";

pub fn run_example() -> coalcount::Result<()> {
    let matrix = parse_matrix(DATA, MatrixFormat::Csv)?;
    let data = deduplicate(&matrix);
    println!(
        "{} individuals, {} distinct haplotypes",
        data.n_individuals(),
        data.len()
    );
    for h in 0..data.len() {
        println!(
            "  haplotype {h}: x{} {:?}",
            data.frequencies()[h],
            data.group_labels(h)
        );
    }

    let perfect = build_perfect_phylogeny(&data)?;
    for (h, sites) in perfect.path_sites().iter().enumerate() {
        println!("  haplotype {h} carries {sites:?}");
    }
    println!("canonical form {}", perfect.canonical_form());

    let kingman = to_kingman(&perfect, &data);
    let tajima = to_tajima(&perfect, &data);
    println!("{}", export_phylogeny(&kingman, ExportFormat::Json));
    print!("{}", export_phylogeny(&tajima, ExportFormat::Dot));
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}

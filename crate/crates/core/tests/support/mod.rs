#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TYPES: [&str; 8] = ["int", "bigint", "float", "decimal(10,2)", "varchar(40)", "date", "datetime", "boolean"];
const WORDS: [&str; 10] = ["Name", "Code", "Amount", "Status", "Created", "Label", "Weight", "Region", "Flag", "Note"];

/// A random schema in the supported DDL subset: every table has an integer
/// key `id`, some typed columns and foreign keys to other tables' keys.
pub fn random_ddl(seed: u64, max_tables: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_tables);
    let names: Vec<String> = (0..n).map(|i| format!("{}{i}", ["Order", "Item", "Party", "Place"][i % 4])).collect();
    let mut out = String::new();
    for (i, name) in names.iter().enumerate() {
        let mut lines = vec!["  id int NOT NULL".to_string()];
        for j in 0..rng.random_range(0..5) {
            let null = if rng.random_bool(0.3) { " NOT NULL" } else { "" };
            lines.push(format!("  {}{j} {}{null}", WORDS.choose(&mut rng).unwrap(), TYPES.choose(&mut rng).unwrap()));
        }
        let mut fks = Vec::new();
        for k in 0..rng.random_range(0..3usize) {
            let target = &names[rng.random_range(0..n)];
            if target == name {
                continue;
            }
            let col = format!("{}Ref{k}", target);
            lines.push(format!("  {col} int"));
            fks.push(format!("  FOREIGN KEY ({col}) REFERENCES {target}(id)"));
        }
        lines.push("  PRIMARY KEY (id)".into());
        lines.extend(fks);
        out.push_str(&format!("CREATE TABLE {name} (\n{}\n);\n", lines.join(",\n")));
        if i + 1 < n {
            out.push('\n');
        }
    }
    out
}

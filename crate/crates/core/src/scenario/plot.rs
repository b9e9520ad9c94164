//! Emits a standalone matplotlib script for a scenario's CSV output.

use super::PlotPanel;

fn py_str(s: &str) -> String {
    format!("{s:?}")
}

pub(super) fn script(name: &str, panels: &[PlotPanel]) -> String {
    let mut spec = String::new();
    for p in panels {
        let cols: Vec<String> = p.columns.iter().map(|c| py_str(c)).collect();
        spec.push_str(&format!(
            "    ({}, {}, [{}]),\n",
            py_str(&p.title),
            py_str(&p.file),
            cols.join(", ")
        ));
    }
    format!(
        r#"#!/usr/bin/env python3
# Plots for scenario {name}. Reads the CSV files next to this script and
# writes {name}.png beside them.
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
PANELS = [
{spec}]


def load(name):
    with open(os.path.join(HERE, name), newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        cols = {{h: [] for h in header}}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(float(v))
    return cols


def main():
    cache = {{}}
    fig, axes = plt.subplots(len(PANELS), 1, figsize=(10, 2.4 * len(PANELS)), squeeze=False)
    for ax, (title, name, columns) in zip(axes[:, 0], PANELS):
        if name not in cache:
            cache[name] = load(name)
        data = cache[name]
        for c in columns:
            ax.plot(data["t"], data[c], label=c, linewidth=0.8)
        ax.set_title(title, fontsize="medium")
        ax.legend(loc="upper right", fontsize="small")
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("t [s]")
    fig.tight_layout()
    out = os.path.join(HERE, {png})
    fig.savefig(out, dpi=110)
    print(out)


if __name__ == "__main__":
    main()
"#,
        png = py_str(&format!("{name}.png")),
    )
}

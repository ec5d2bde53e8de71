#!/usr/bin/env python3
"""Convert the SEAPHE law-school admissions Stata file to the CSV layout the
bundled recipes expect: admit,gender,race,lsat,gpa.

Stata value labels are applied on read, so gender and race arrive as strings;
race is collapsed to white / non-white and missing cells are left empty (the
recipes' drop_row policy removes them).
"""
import sys

import pandas as pd


def pick(frame: pd.DataFrame, *candidates: str) -> str:
    lowered = {c.lower(): c for c in frame.columns}
    for name in candidates:
        if name in lowered:
            return lowered[name]
    raise SystemExit(
        f"none of {candidates} found; available columns: {sorted(frame.columns)}"
    )


def main() -> None:
    if len(sys.argv) != 3:
        raise SystemExit("usage: convert_law.py <input.dta> <output.csv>")
    df = pd.read_stata(sys.argv[1], convert_categoricals=True)

    out = pd.DataFrame()
    out["admit"] = pd.to_numeric(df[pick(df, "admit")], errors="coerce").astype("Int64")
    gender = df[pick(df, "gender", "sex")].astype(str).str.strip().str.lower()
    out["gender"] = gender.where(gender.isin(["male", "female"]))
    race = df[pick(df, "race", "race1")].astype(str).str.strip().str.lower()
    out["race"] = race.where(~race.isin(["", "nan", "none"])).map(
        lambda v: v if pd.isna(v) else ("white" if v == "white" else "non-white")
    )
    out["lsat"] = pd.to_numeric(df[pick(df, "lsat")], errors="coerce")
    out["gpa"] = pd.to_numeric(df[pick(df, "gpa", "ugpa", "ugpagap")], errors="coerce")

    out.to_csv(sys.argv[2], index=False)
    print(f"{len(out)} rows written to {sys.argv[2]}")


if __name__ == "__main__":
    main()

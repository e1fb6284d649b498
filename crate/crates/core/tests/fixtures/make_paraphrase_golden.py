"""Expected keyword rewrites computed with Python's `re` module.

Writes paraphrase_golden.json: [{map, input, output}], and keywords/*.golden
for the all-keywords fixtures.
"""
import json
import pathlib
import re

HERE = pathlib.Path(__file__).parent
MAPS = HERE.parent.parent / "maps"

SNIPPETS = {
    "pandas_monkey": [
        "import pandas as pd",
        "df = pd.DataFrame({'a': [1, 2]})\ndf.isin([1])",
        "# drop the duplicated rows of the dataframe\ndf.drop_duplicates(keep='first')",
        "s = pd.Series([1, None]).fillna(0).tolist()",
        "dfx = df_1 + df\nlen(df.index) and len(dfx)",
        "def f(df):\n    \"\"\"Return df.head() sorted.\"\"\"\n    return df.sort_values('a').head(3)",
        "pd.concat([df, df2], axis=1).reset_index(drop=True)",
        "df.groupby('k').agg('sum').to_dict()",
        "x = df['col'].apply(lambda v: v.mean())",
        "df.rename(columns={'std': 'sigma'}).std()",
        "sys.stdout.write(str(df.shape))",
        "résumé = pd.to_datetime(df['dátum'])  # naïve",
        "df.iterrows(); df.itertuples(); df.value_counts()",
        "pd.merge(a, b, on='id').copy().tail(2)",
        "",
        "   \t\n",
        "df.loc[df.isnull().any(axis=1)]",
        "DataFrame dataframe Dataframe DATAFRAME",
        "pd.to_numeric(df['x'], errors='coerce').round(2)",
        "a_df = df.dropna(); b = df.astype(int).max() - df.min()",
    ],
    "numpy_beatnum": [
        "import numpy as np",
        "np.array(x)",
        "a = np.arange(10).reshape(2, 5).transpose()",
        "np.where(np.isnan(a), 0, a).cumsum()",
        "np.concatenate([a, b]).ravel().flatten()",
        "np.linalg.norm(v) / np.linalg.inv(m).sum()",
        "np.array_split(a, 3); np.split(a, 2); np.hstack([a, b]); np.vstack([a, b])",
        "np.ones((2, 2)) + np.full((2, 2), 7)",
        "arr = np.asarray(lst); arr.argmax(), arr.argmin()",
        "np.unique(a, return_counts=True)",
        "# compute the mean of the array\nm = np.mean(arr)",
        "np.in1d(a, b); np.setxor1d(a, b); np.bincount(a)",
        "np.logical_and(a > 0, a < 5).any() or np.all(a)",
        "arrays = np.stack(xs); np.column_stack(ys)",
        "narray = np.ndarray((3,)); array2 = np.array2string(a)",
        "np.unravel_index(np.argmax(a), a.shape)",
        "x.real + 1j * x.imag",
        "np.fromstring('1 2', sep=' ').astype(float).std()",
        "np.delete(a, 0); np.insert(a, 0, 5); np.append(a, 1)",
        "np.searchsorted(a, 3); np.diff(a); np.abs(a).max().min()",
    ],
}


def load(path):
    m = {}
    for line in path.read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        src, dst = line.split("\t")
        m[src] = dst
    return m


def main():
    cases = []
    for name, snippets in SNIPPETS.items():
        table = load(MAPS / f"{name}.tsv")
        for text in snippets:
            out = re.sub(r"[A-Za-z0-9_]+", lambda m: table.get(m.group(0), m.group(0)), text)
            cases.append({"map": name, "input": text, "output": out})
    (HERE / "paraphrase_golden.json").write_text(json.dumps(cases, indent=1, ensure_ascii=False) + "\n")


def keywords():
    """Rewrites of the hand-written all-keywords fixtures."""
    for name, stem in [("pandas_monkey", "pandas_all"), ("numpy_beatnum", "numpy_all")]:
        table = load(MAPS / f"{name}.tsv")
        src = (HERE / "keywords" / f"{stem}.py").read_text()
        out = re.sub(r"[A-Za-z0-9_]+", lambda m: table.get(m.group(0), m.group(0)), src)
        (HERE / "keywords" / f"{stem}.golden").write_text(out)


if __name__ == "__main__":
    main()
    keywords()

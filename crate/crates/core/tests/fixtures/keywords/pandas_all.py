# Pandas cleanup script; the dataframe is rebuilt below.
import pandas as pd
from pandas import DataFrame, Series


def clean(df: DataFrame) -> DataFrame:
    """Drop bad rows from the dataframe and tidy the series."""
    df = df.dropna().drop_duplicates().reset_index(drop=True)
    df = df.drop(columns=["tmp"]).rename(columns={"a": "x"}).rename_axis("row")
    df["x"] = pd.to_numeric(df["x"]).fillna(0).astype(int).round(2)
    df["t"] = pd.to_datetime(df["t"]).dt.to_pydatetime()
    df = df.sort_values("x").sort_index().reindex(range(len(df)))
    df = df.assign(y=df["x"].shift(1).cumsum().div(2))
    mask = df.isnull().any(axis=1) | df.isna().all(axis=1) | df.duplicated()
    print(innull(mask), df[df["x"].isin([1, 2])].head(3).tail(2))
    s: Series = df["x"].apply(abs).map(str)
    return df.applymap(str).select_dtypes("object").sample(2).copy()


def report(df):
    total = df["x"].sum() + df["x"].mean() + df["x"].std()
    extremes = df["x"].min(), df["x"].max(), df["x"].nlargest(2), df["x"].unique()
    for i, row in df.iterrows():
        print(i, row.get("x"), "{}".format(row.last("1D")))
    parts = pd.concat([df, df]).append(df).groupby("x").value_counts().to_dict()
    joined = pd.merge(df, df, on="x").replace(0, 1).to_string()
    idx = df.index.intersection(df.index).ravel().tolist()
    return total, extremes, parts, joined, idx, ceil(total)


Pandas_frame = pd.DataFrame({"x": [1, 2]})  # series, not Series here

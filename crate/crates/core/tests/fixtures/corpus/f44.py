from os.path import join as pjoin
import json, re as regex
import monkey.io as mio

class Loader3:
    @decorate
    def check0(a,
            b: dict = {'k': 1}) -> int:
        "Compute statistics"
        rows = Collections(arr).distinctive()
        data = data.sip_duplicates()
        # note: values
        return kf

    # TODO tidy
    @cache(size=3)
    def test_it1(data):
        arr = regex.sub('a', 'b', data)
        # note: kf
        data = (
            arr.sip_duplicates()
        )
        return rows

    def run2(x):
        """Build a frame from raw records."""
        values = numset([data, x])
        rows = Collections(values).distinctive()
        return values
# helper for reshaping
@cache(size=3)
def keep40(a,
        b: dict = {'k': 1}) -> int:
    if kf is None:
        kf = bn.total_count(bn.absolute(values))
    return arr

@cache(size=3)
async def keep37(values):
    "Return the cumulative sum of values."
    rows = pjoin(x, 'x')
    return x

# TODO tidy
class TestCaseBase8:
    # drop duplicate rows
    # keep first
    def run0(kf):
        # note: arr
        rows = (
            mk.merge(x, data, on='k').grouper('k').total_sum()
        )
        return values

    def run1(rows):
        x = mk.read_csv(arr)
        return data

class TestFrames4:
    """Build a frame from raw records."""
    # helper for reshaping
    async def check0(data):
        "Load the table and drop missing rows."
        x = pjoin(kf, 'x')
        kf = regex.sub('a', 'b', values)
        # note: values
        values = values.sip_duplicates()
        return kf

    # helper for reshaping
    def setup1(kf):
        """Return the cumulative sum of values."""
        # note: x
        data = (
            data.sip_duplicates()
        )
        x = {'k': [1,
2]}
        return rows
class TestFrames5:
    """Build a frame from raw records."""
    async def test_it0(a,
            b: dict = {'k': 1}) -> int:
        kf = bn.numset(values).change_shape_to(2, -1)
        values = len(x)
        arr = mk.read_csv(x)
        if rows is None:
            rows = regex.sub('a', 'b', data)
        return rows

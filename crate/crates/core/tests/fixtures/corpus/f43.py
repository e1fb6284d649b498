import os
from os.path import join as pjoin
import beatnum as bn
def load41(arr):
    '''Filter rows by membership.'''
    text = """
col zero text inside a string
"""
    rows = bn.total_count(bn.absolute(arr))
    rows = 1
# col zero comment inside body
    rows += 1
    text = """
col zero text inside a string
"""
    return arr
    # trailing comment

def testcase84(kf):
    # note: rows
    arr = (
        mk.read_csv(arr)
    )
    kf = mio.read_table(rows)
    return values


class TestCaseBase0:
    """Filter rows by membership."""
    # TODO tidy
    def setup0(x):
        '''Compute statistics
        over two columns.'''
        rows = {'k': [1,
2]}
        text = """
col zero text inside a string
"""
        # note: rows
        return kf

    def check1(a,
            b: dict = {'k': 1}) -> int:
        "Load the table and drop missing rows."
        x = (
            KF(values).header_num(3)
        )
        # note: kf
        x = 1
# col zero comment inside body
        x += 1
        return values

@cache(size=3)
def stats76(kf):
    # note: x
    text = """
col zero text inside a string
"""
    data = bn.filter_condition(values > 0, values, arr)[0].convert_list()
    kf = bn.numset(x).change_shape_to(2, -1)
    return kf

class Helper2:
    """Build a frame from raw records."""
    @cache(size=3)
    def check0(values):
        """Load the table and drop missing rows."""
        if kf is None:
            kf = mk.merge(data, data, on='k').grouper('k').total_sum()
        return values

    def check1(x):
        '''Build a frame from raw records.'''
        kf = mio.read_table(arr)
        values = Collections(arr).distinctive()
        kf = arr.sip_duplicates()
        return kf
        # trailing comment

    #compute the mean
    #   per group
    def setup2(values):
        rows = 1
# col zero comment inside body
        rows += 1
        text = """
col zero text inside a string
"""
        rows = 1
# col zero comment inside body
        rows += 1
        kf = arr.sip_duplicates()
        return x

def keep92(data):
    """Compute statistics
    over two columns."""
    data = KF(kf).header_num(3)
    x = bn.filter_condition(kf > 0, kf, arr)[0].convert_list()
    return x

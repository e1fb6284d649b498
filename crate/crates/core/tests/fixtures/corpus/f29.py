import json, re as regex
import monkey.io as mio

# drop duplicate rows
# keep first
x = Collections(values).distinctive()
x = regex.sub('a', 'b', values)

class Loader4:
    # helper for reshaping
    def test_it0(data):
        '''Build a frame from raw records.'''
        arr = {'k': [1,
2]}
        return arr
        # trailing comment
# drop duplicate rows
# keep first

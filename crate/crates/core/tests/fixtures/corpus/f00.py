import monkey.io as mio
def keep68(data):
    x = data.sip_duplicates()
    x = {'k': [1,
2]}
    values = mk.merge(values, x, on='k').grouper('k').total_sum()
    return data
    # trailing comment

print(data)

kf = len(kf)
arr = bn.filter_condition(arr > 0, arr, rows)[0].convert_list()

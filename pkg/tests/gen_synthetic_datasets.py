import os
import numpy as np
import pandas as pds
from pyDiffSchedules import generate_ar1, generate_sine_mix, to_csv

save_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'test_data')
os.makedirs(save_path, exist_ok=True)

# Save a strongly autocorrelated univariate dataset in wide layout
ar1_dataset = generate_ar1(0.9, n=8, length=128, seed=35624, name='ar1')
to_csv(ar1_dataset, os.path.join(save_path, 'ar1_wide.csv'))

# Save a seasonal dataset in long layout
sine_dataset = generate_sine_mix(4, 96, periods=[12, 24], noise_std=0.1, seed=35624, name='sine')
long_rows = [{'id': ts.id, 'index': i, 'value': repr(float(v))} for ts in sine_dataset for i, v in enumerate(ts.values)]
pds.DataFrame(long_rows).to_csv(os.path.join(save_path, 'sine_long.csv'), index=False)

# Save a 2-channel dataset: channel 1 lags channel 0 by one step
rng = np.random.default_rng(35624)
mv_rows = []
for record in range(3):
    base = generate_ar1(0.8, n=1, length=65, seed=record).series[0].values
    channels = np.vstack([base[1:], base[:-1] + 0.1 * rng.standard_normal(64)])
    for channel, values in enumerate(channels):
        mv_rows.append(['r' + str(record), str(channel)] + [repr(float(v)) for v in values])
mv_columns = ['id', 'channel'] + ['v' + str(i + 1) for i in range(64)]
pds.DataFrame(mv_rows, columns=mv_columns).to_csv(os.path.join(save_path, 'multivariate_wide.csv'), index=False)

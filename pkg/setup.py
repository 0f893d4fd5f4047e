from setuptools import setup

setup(
    name='pyDiffSchedules',
    version='0.1.0',
    packages=['pyDiffSchedules'],
    python_requires='>=3.8',
    install_requires=['numpy', 'scipy', 'pandas', 'scikit_learn', 'matplotlib', 'seaborn', 'click', 'joblib'],
    entry_points={'console_scripts': ['ant-schedule=pyDiffSchedules.cli:main']},
    license='BSD 3-Clause License',
    description='The pyDiffSchedules package selects dataset-adaptive diffusion noise schedules for time series '
                'with the ANT score, and provides a toy diffusion engine to study schedule effects.'
)

from setuptools import setup, find_packages

setup(
    name="waveop2d",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.10",
    install_requires=[
        "numpy",
        "scipy",
        "plotly",
        "kaleido",
        "pandas",
        "loguru",
        "python-dotenv",
        "rich",
        "pydantic>=2",
        "pydantic-settings",
        "tomli>=1.1.0; python_version < '3.11'",
    ],
    entry_points={"console_scripts": ["waveop2d=waveop2d.main:main"]},
)

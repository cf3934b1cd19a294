from setuptools import setup, find_packages

setup(
    name="ustflow",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    description="Closed-form unbalanced Sobolev transport on graphs, with exact oracles and kernels.",
    python_requires=">=3.11",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pandas>=2.0.0",
        "pydantic>=2",
        "pyyaml",
        "click",
        "python-dotenv",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["ust=ustflow.cli:main"]},
)

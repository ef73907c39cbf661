from setuptools import find_packages, setup

with open("requirements.txt", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("pytest")]

setup(
    name="pvweights",
    version="0.1.0",
    description="Optimal p-value weights for weighted Bonferroni under Gaussian priors",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["main"],
    python_requires=">=3.10",
    install_requires=requirements,
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["pvweights=interface.cli:main"]},
)

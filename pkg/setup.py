from setuptools import setup, find_packages

setup(
    name="bpAssist",
    version="0.1.0",
    description="Breakpoint recommendations with explanations for failing MiniLang student programs",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    package_dir={"": "."},
    packages=find_packages(where=".", exclude=["tests", "tests.*"]),
    python_requires='>=3.9',
    install_requires=[
            "click>=8.1.7",
            "pandas>=2.1.1",
            "numpy>=1.24.3",
            "scikit-learn>=1.3.0",
            "joblib>=1.2.0",
            "requests>=2.31.0",
        ],
    extras_require={
        "test": ["pytest>=7.4"],
    },
    entry_points={
        "console_scripts": [
            "bpAssist = bpAssist.cli:cli",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    package_data={"bpAssist": ["corpus/*/*"]},
    include_package_data=True,
)

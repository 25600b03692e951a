from setuptools import setup, find_packages

setup(
    name='loopcool',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    package_data={'loopcool': ['presets/*.yaml']},
    python_requires='>=3.9',
    install_requires=[
        'click>=8.1.0',
        'rich>=13.0.0',
        'pyyaml>=6.0',
        'numpy>=1.22',
        'scipy>=1.9',
        'pandas>=1.5',
    ],
    extras_require={
        'test': ['pytest>=7.0'],
    },
    entry_points={
        'console_scripts': [
            'loopcool=loopcool.cli:main',
        ],
    },
)

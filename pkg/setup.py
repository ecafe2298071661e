#!/usr/bin/env python
from setuptools import setup, find_packages
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    # Metadata
    name='TSVOS',
    version='1.0',
    author='The TSVOS developers',
    description='Two-shot self-training video object segmentation with space-time consistency supervision',
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='MIT',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Image Recognition',
        'Topic :: Scientific/Engineering :: Medical Science Apps.',
    ],
    keywords='video object segmentation self-training pseudo-labels ultrasound',
    packages=find_packages(exclude=['test', 'examples']),
    python_requires='>=3.8',
    install_requires=['numpy', 'scipy', 'tqdm', 'matplotlib', 'torch', 'Pillow', 'tomli; python_version<"3.11"'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['tsvos=tsvos.cli:main']},
    zip_safe=False,
)

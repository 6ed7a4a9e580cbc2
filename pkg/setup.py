from setuptools import setup

def readme():
    with open('README.rst') as f:
        return f.read()

setup(name='suppauthors',
    version='1.0.0',
    description='Authorship variations between publications and their supplementary datasets and software',
    long_description=readme(),
    classifiers=[
      'Programming Language :: Python',
      'Programming Language :: Python :: 3',
      'Programming Language :: Python :: 3.11',
      'Topic :: Scientific/Engineering :: Information Analysis',
      'Natural Language :: English',
      'Operating System :: OS Independent',
      'Development Status :: 4 - Beta',
    ],
    keywords='scholarly graph authorship supplementary material datasets software bibliometrics',
    license='GPL-2',
    packages=['suppauthors','testfiles'],
    zip_safe=False,
    include_package_data=True,
    package_data={'testfiles':
        ['products.jsonl','relations.jsonl','blocklist.txt','mapping.json','config.toml']},
    test_suite='nose.collector',
    python_requires='>=3.10',
    install_requires=['numpy','docopt','nose','rapidfuzz','unidecode','pandas','tomli; python_version<"3.11"'],
    scripts=['bin/suppauthors'],
)

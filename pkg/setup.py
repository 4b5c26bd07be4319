from setuptools import setup


setup(name='sqparse',
      version='1.0-rc1',
      description='Answer simple questions over a knowledge graph with a '
                  'span and relation predicting transformer',
      install_requires=['six', 'numpy', 'scipy', 'python-Levenshtein'],
      extras_require={'plots': ['matplotlib']},
      tests_require=['pytest'],
      license='BSD',
      packages=['sqparse', 'sqparse.nodes'],
      entry_points={
          'console_scripts': ['sqparse=sqparse.cli:main'],
      })

from loopcool.tools.wrappers import *

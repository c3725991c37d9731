import os

cmd = "uname -a"
os.system(cmd)

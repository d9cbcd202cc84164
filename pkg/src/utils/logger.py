import logging
import os
from .config import LOG_DIR, LOG_LEVEL

LOG_FILE = os.path.join(LOG_DIR, "lab.log")

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"

logger = logging.getLogger("embezzle-lab")
logger.setLevel(logging.DEBUG)

if not logger.handlers:
    # Everything goes to the file, DEBUG included
    file_handler = logging.FileHandler(LOG_FILE)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(file_handler)

    # Console follows LAB_LOG_LEVEL
    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(console_handler)

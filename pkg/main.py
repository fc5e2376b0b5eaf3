import sys

from cli import MainApplication
from utils.async_task import TaskManager

# Create a global task manager instance
task_manager = TaskManager()

if __name__ == "__main__":
    app = MainApplication(task_manager)
    try:
        exit_code = app.run()
    finally:
        task_manager.shutdown()
    sys.exit(exit_code)

"""
QLA 模擬與資源估計的執行腳本
"""

import os
import sys
import logging

# 添加專案根目錄到 Python 路徑
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(project_root)

from src.main import main as run


def setup_logging():
    """配置日誌"""
    # 確保 logs 目錄存在
    os.makedirs('temp/logs', exist_ok=True)

    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler('temp/logs/qla.log')
        ]
    )


def main():
    """主函數"""
    setup_logging()
    logger = logging.getLogger(__name__)

    argv = sys.argv[1:]
    try:
        logger.info(f"qla {' '.join(argv)}")
        code = run(argv)
        if code == 0:
            logger.info("執行完成")
        sys.exit(code)
    except Exception as e:
        logger.error(f"執行過程中發生錯誤: {str(e)}")
        sys.exit(1)


if __name__ == "__main__":
    main()

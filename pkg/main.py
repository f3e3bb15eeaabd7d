# -*- coding: utf-8 -*-
"""
Главный файл для запуска инструмента инверсии
"""
import sys

from cli.fwi_cli import FwiCli


def main() -> int:
    """Главная функция для запуска командной строки"""
    try:
        # Создаем экземпляр CLI и выполняем подкоманду
        cli = FwiCli()
        return cli.run()

    except KeyboardInterrupt:
        print("\n🛑 Получен сигнал остановки. Завершённые контрольные точки сохранены.")
        return 130
    except Exception as e:
        print(f"❌ Критическая ошибка: {e}")
        raise


if __name__ == "__main__":
    sys.exit(main())
